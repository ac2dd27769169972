#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Covers both hot loops: edit-distance table fill (corpus scoring) and
polyphase FIR evaluation (resampling / speed perturbation).

    python benchmarks/bench_kernels.py [--repeats 5]
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from elderaug.kernels import _pykernels

try:
    from elderaug.kernels import _ckernels
except ImportError:
    _ckernels = None


def time_call(fn, repeats: int) -> float:
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best.append(time.perf_counter() - t0)
    return statistics.median(best)


def bench_levenshtein(impl, repeats: int) -> float:
    rng = np.random.default_rng(0)
    pairs = [
        (
            rng.integers(0, 80, 120).astype(np.int32),
            rng.integers(0, 80, 130).astype(np.int32),
        )
        for _ in range(200)
    ]

    def run():
        for a, b in pairs:
            impl.levenshtein_matrix(a, b)

    return time_call(run, repeats)


def bench_polyphase(impl, repeats: int) -> float:
    rng = np.random.default_rng(1)
    # 22.05 kHz -> 16 kHz conversion of a 10 s clip (up=320, down=441)
    up, down = 320, 441
    x = rng.normal(0, 0.1, 220500)
    half_len = 16 * down
    h = np.sinc(np.arange(2 * half_len + 1) - half_len) * np.kaiser(2 * half_len + 1, 8.6)
    per_phase = -(-(2 * half_len + 1) // up)
    phases = np.zeros((up, per_phase))
    for p in range(up):
        taps = h[p::up]
        phases[p, : len(taps)] = taps
    out_len = -(-len(x) * up // down)

    def run():
        impl.polyphase_fir(x, phases, up, down, half_len, out_len)

    return time_call(run, repeats)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rows = []
    for name, bench in (("levenshtein (200 pairs, ~125 tokens)", bench_levenshtein),
                        ("polyphase FIR (10 s, 22.05k->16k)", bench_polyphase)):
        pure = bench(_pykernels, args.repeats)
        if _ckernels is not None:
            compiled = bench(_ckernels, args.repeats)
            rows.append((name, pure, compiled, pure / compiled))
        else:
            rows.append((name, pure, None, None))

    print(f"{'kernel':<38} {'pure (s)':>10} {'compiled (s)':>13} {'speedup':>9}")
    for name, pure, compiled, speedup in rows:
        if compiled is None:
            print(f"{name:<38} {pure:>10.4f} {'not built':>13} {'-':>9}")
        else:
            print(f"{name:<38} {pure:>10.4f} {compiled:>13.4f} {speedup:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Sample-rate conversion and speed perturbation.

Both are built on one polyphase windowed-sinc resampler: Kaiser window
(beta = 8.6), 32 taps per phase, odd signal extension at the edges to keep
boundary transients small. The per-sample inner loop lives in
elderaug.kernels (compiled when available).
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from elderaug.dsp.audio_io import AudioClip
from elderaug.kernels import polyphase_fir

KAISER_BETA = 8.6
TAPS_PER_PHASE = 32

SPEED_FACTOR_MIN = 0.5
SPEED_FACTOR_MAX = 2.0


@lru_cache(maxsize=32)
def _phase_filters(up: int, down: int) -> tuple[np.ndarray, int]:
    """Design the anti-alias prototype and split it into `up` phases.

    Returns (phases[up, ceil(T/up)], half_len) where T = 2*half_len + 1 and
    half_len = (TAPS_PER_PHASE / 2) * max(up, down). Cutoff sits at the
    narrower of the two Nyquist bands; gain `up` compensates zero stuffing.
    """
    max_rate = max(up, down)
    half_len = (TAPS_PER_PHASE // 2) * max_rate
    n_taps = 2 * half_len + 1
    cutoff = 1.0 / max_rate  # fraction of the upsampled Nyquist
    t = np.arange(n_taps, dtype=np.float64) - half_len
    h = up * cutoff * np.sinc(cutoff * t) * np.kaiser(n_taps, KAISER_BETA)
    per_phase = -(-n_taps // up)
    phases = np.zeros((up, per_phase), dtype=np.float64)
    for p in range(up):
        taps = h[p::up]
        phases[p, : len(taps)] = taps
    return phases, half_len


def _odd_extend(x: np.ndarray, left: int, right: int) -> np.ndarray:
    """Antisymmetric extension about the endpoints (filtfilt-style)."""
    n = len(x)
    parts = []
    if left > 0:
        idx = np.minimum(np.arange(left, 0, -1), n - 1)
        parts.append(2.0 * x[0] - x[idx])
    parts.append(x)
    if right > 0:
        idx = np.maximum(n - 1 - np.arange(1, right + 1), 0)
        parts.append(2.0 * x[-1] - x[idx])
    return np.concatenate(parts)


def _resample_ratio(x: np.ndarray, up: int, down: int) -> np.ndarray:
    """Resample x by the rational factor up/down."""
    g = math.gcd(up, down)
    up //= g
    down //= g
    if up == down:
        return x.copy()
    n = len(x)
    phases, half_len = _phase_filters(up, down)
    out_len = -(-n * up // down)
    pad = -(-half_len // up) + 1
    extended = _odd_extend(x, pad, pad + down // up + 1)
    offset = half_len + pad * up
    return polyphase_fir(extended, phases, up, down, offset, out_len)


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Band-limited resampling to target_rate; identity when rates match."""
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == clip.sample_rate:
        return clip
    y = _resample_ratio(clip.samples, target_rate, clip.sample_rate)
    return AudioClip(samples=y, sample_rate=target_rate)


def speed_perturb(clip: AudioClip, factor: float) -> AudioClip:
    """Change tempo (and pitch) by `factor`, keeping the nominal sample rate.

    Resamples the waveform by 1/factor and relabels it at the original
    rate, so duration scales by 1/factor.
    """
    if not (SPEED_FACTOR_MIN <= factor <= SPEED_FACTOR_MAX):
        raise ValueError(
            f"speed factor {factor} outside [{SPEED_FACTOR_MIN}, {SPEED_FACTOR_MAX}]"
        )
    if factor == 1.0:
        return clip
    frac = Fraction(str(float(factor))).limit_denominator(10000)
    y = _resample_ratio(clip.samples, frac.denominator, frac.numerator)
    return AudioClip(samples=y, sample_rate=clip.sample_rate)

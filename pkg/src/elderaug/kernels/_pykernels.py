"""Pure numpy implementations of the compiled kernels.

Same contracts as _ckernels; used when the extension is not built or when
ELDERAUG_PURE_PYTHON=1 forces the fallback.
"""

from __future__ import annotations

import numpy as np


def levenshtein_matrix(ref: np.ndarray, hyp: np.ndarray) -> np.ndarray:
    """Full (n+1, m+1) unit-cost edit-distance table for two id sequences."""
    n, m = len(ref), len(hyp)
    d = np.empty((n + 1, m + 1), dtype=np.int32)
    d[0, :] = np.arange(m + 1, dtype=np.int32)
    d[:, 0] = np.arange(n + 1, dtype=np.int32)
    if m == 0 or n == 0:
        return d
    offsets = np.arange(m + 1, dtype=np.int32)
    for i in range(1, n + 1):
        # t[j] = min(diagonal + substitution cost, up + 1); the remaining
        # left-neighbor dependency is a prefix-min solved via offsets.
        t = np.empty(m + 1, dtype=np.int32)
        t[0] = i
        np.minimum(
            d[i - 1, :-1] + (hyp != ref[i - 1]).astype(np.int32),
            d[i - 1, 1:] + 1,
            out=t[1:],
        )
        d[i, :] = np.minimum.accumulate(t - offsets) + offsets
    return d


def polyphase_fir(
    x: np.ndarray,
    phases: np.ndarray,
    up: int,
    down: int,
    offset: int,
    out_len: int,
) -> np.ndarray:
    """Evaluate y[k] = sum_q phases[s % up, q] * x[s // up - q], s = k*down + offset.

    Out-of-range input indices contribute zero.
    """
    n = len(x)
    ntaps = phases.shape[1]
    s = offset + down * np.arange(out_len, dtype=np.int64)
    phase = s % up
    base = s // up
    y = np.zeros(out_len, dtype=np.float64)
    for q in range(ntaps):
        idx = base - q
        valid = (idx >= 0) & (idx < n)
        if not valid.any():
            if (idx < 0).all():
                break
            continue
        y[valid] += phases[phase[valid], q] * x[idx[valid]]
    return y

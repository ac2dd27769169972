# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: edit-distance table fill and polyphase FIR."""

import numpy as np

cimport numpy as cnp


def levenshtein_matrix(cnp.int32_t[::1] ref, cnp.int32_t[::1] hyp):
    """Full (n+1, m+1) unit-cost edit-distance table for two id sequences."""
    cdef Py_ssize_t n = ref.shape[0]
    cdef Py_ssize_t m = hyp.shape[0]
    dist = np.empty((n + 1, m + 1), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] d = dist
    cdef Py_ssize_t i, j
    cdef cnp.int32_t best, up, left

    for j in range(m + 1):
        d[0, j] = <cnp.int32_t> j
    for i in range(1, n + 1):
        d[i, 0] = <cnp.int32_t> i
        for j in range(1, m + 1):
            best = d[i - 1, j - 1]
            if ref[i - 1] != hyp[j - 1]:
                best = best + 1
            up = d[i - 1, j] + 1
            left = d[i, j - 1] + 1
            if up < best:
                best = up
            if left < best:
                best = left
            d[i, j] = best
    return dist


def polyphase_fir(
    cnp.float64_t[::1] x,
    cnp.float64_t[:, ::1] phases,
    Py_ssize_t up,
    Py_ssize_t down,
    Py_ssize_t offset,
    Py_ssize_t out_len,
):
    """Evaluate y[k] = sum_q phases[s % up, q] * x[s // up - q], s = k*down + offset.

    Out-of-range input indices contribute zero. `phases[p, q]` holds filter
    tap p + q*up of the zero-stuffed prototype.
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t ntaps = phases.shape[1]
    out = np.zeros(out_len, dtype=np.float64)
    cdef cnp.float64_t[::1] y = out
    cdef Py_ssize_t k, q, s, phase, base, idx
    cdef double acc

    for k in range(out_len):
        s = k * down + offset
        phase = s % up
        base = s // up
        acc = 0.0
        for q in range(ntaps):
            idx = base - q
            if idx < 0:
                break
            if idx >= n:
                continue
            acc += phases[phase, q] * x[idx]
        y[k] = acc
    return out

"""Compiled kernels for numeric arrays under the natural ``<=`` order.

Same algorithms as :mod:`corank.coranker` and :mod:`corank.seqmerge`,
compiled with ``nogil`` so worker threads merge in parallel.
"""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(nogil=True, cache=True)
def co_rank_nb(i, a, b):
    """Return ``(j, k, steps, comparisons)`` for rank ``i``."""
    m = a.shape[0]
    n = b.shape[0]
    j = min(i, m)
    k = i - j
    j_low = max(0, i - n)
    k_low = max(0, i - m)
    steps = 0
    comparisons = 0
    while True:
        if j > 0 and k < n:
            comparisons += 1
            if a[j - 1] > b[k]:
                delta = (j - j_low + 1) // 2
                k_low = k
                j -= delta
                k += delta
                steps += 1
                continue
        if k > 0 and j < m:
            comparisons += 1
            if b[k - 1] >= a[j]:
                delta = (k - k_low + 1) // 2
                j_low = j
                j += delta
                k -= delta
                steps += 1
                continue
        return j, k, steps, comparisons


@numba.njit(nogil=True, cache=True)
def merge_block_nb(a, a_lo, a_hi, b, b_lo, b_hi, out, out_lo, source, track):
    """Merge ``a[a_lo:a_hi]`` and ``b[b_lo:b_hi]`` into ``out`` from ``out_lo``.

    With ``track`` set, ``source[t]`` receives ``x`` for ``a[x]`` and
    ``len(a) + y`` for ``b[y]``.  Returns the comparison count.
    """
    m = a.shape[0]
    x = a_lo
    y = b_lo
    t = out_lo
    comparisons = 0
    while x < a_hi and y < b_hi:
        comparisons += 1
        if a[x] <= b[y]:
            out[t] = a[x]
            if track:
                source[t] = x
            x += 1
        else:
            out[t] = b[y]
            if track:
                source[t] = m + y
            y += 1
        t += 1
    while x < a_hi:
        out[t] = a[x]
        if track:
            source[t] = x
        x += 1
        t += 1
    while y < b_hi:
        out[t] = b[y]
        if track:
            source[t] = m + y
        y += 1
        t += 1
    return comparisons


@numba.njit(nogil=True, cache=True)
def worker_nb(r, p, a, b, out, source, track):
    """One worker of the synchronization-free merge, start to finish.

    Returns ``(out_begin, out_end, a_begin, a_end, b_begin, b_end,
    steps_start, steps_end, comparisons)``.
    """
    total = a.shape[0] + b.shape[0]
    q = total // p
    rem = total % p
    i_begin = r * q + (r * rem) // p
    i_end = (r + 1) * q + ((r + 1) * rem) // p
    j0, k0, s0, c0 = co_rank_nb(i_begin, a, b)
    j1, k1, s1, c1 = co_rank_nb(i_end, a, b)
    c2 = merge_block_nb(a, j0, j1, b, k0, k1, out, i_begin, source, track)
    return i_begin, i_end, j0, j1, k0, k1, s0, s1, c0 + c1 + c2


def empty_source() -> np.ndarray:
    return np.empty(0, dtype=np.int64)

"""Co-ranking: locate the input prefixes that form any prefix of a stable merge.

For a rank ``i`` into the (never materialized) stable merge ``C`` of two
sorted sequences ``a`` and ``b``, :func:`co_rank` returns the unique pair
``(j, k)`` with ``j + k == i`` such that merging ``a[:j]`` and ``b[:k]``
yields exactly ``C[:i]``.  The pair is characterized by

    j == 0 or a[j-1] <= b[k]
    k == 0 or b[k-1] <  a[j]

where reads past either end behave as -inf / +inf sentinels and are never
performed.  The strict second condition is what puts equal elements of
``a`` ahead of equal elements of ``b``.
"""

from __future__ import annotations

import operator
import sys
from dataclasses import dataclass
from typing import Any, Callable, NamedTuple, Sequence

Leq = Callable[[Any, Any], bool]

__all__ = [
    "CoRanks",
    "ComparisonCounter",
    "RankError",
    "co_rank",
    "co_rank_counted",
    "iteration_bound",
    "tight_iteration_bound",
    "satisfies_corank_conditions",
]


class RankError(ValueError):
    """Raised when a rank lies outside ``[0, m + n]``."""


class CoRanks(NamedTuple):
    j: int
    k: int


@dataclass
class ComparisonCounter:
    """Per-call instrumentation for :func:`co_rank_counted`.

    ``count`` is the number of key comparisons evaluated; ``iterations`` the
    number of search steps that moved ``(j, k)``.  The final pass that only
    confirms both conditions is not a search step.
    """

    count: int = 0
    iterations: int = 0

    def reset(self) -> None:
        self.count = 0
        self.iterations = 0


def _check_rank(i: int, m: int, n: int) -> None:
    if m + n > sys.maxsize:
        raise RankError(f"m + n = {m + n} exceeds the index range")
    if i < 0 or i > m + n:
        raise RankError(f"rank out of range: i={i} not in [0, {m + n}]")


def co_rank_counted(
    i: int,
    a: Sequence,
    b: Sequence,
    leq: Leq | None = None,
    counter: ComparisonCounter | None = None,
) -> CoRanks:
    """Like :func:`co_rank`, accumulating comparisons and steps in ``counter``."""
    m, n = len(a), len(b)
    i = operator.index(i)
    _check_rank(i, m, n)
    if leq is None:
        leq = operator.le
    if counter is None:
        counter = ComparisonCounter()

    j = min(i, m)
    k = i - j
    j_low = max(0, i - n)
    # Always overwritten by the first step that reads it; this is its
    # analytic lower bound.
    k_low = max(0, i - m)

    while True:
        if j > 0 and k < n:
            counter.count += 1
            # a[j-1] > b[k]: first condition violated, shrink j
            if not leq(a[j - 1], b[k]):
                delta = (j - j_low + 1) // 2
                k_low = k
                j -= delta
                k += delta
                counter.iterations += 1
                continue
        if k > 0 and j < m:
            counter.count += 1
            # b[k-1] >= a[j]: second condition violated, shrink k
            if leq(a[j], b[k - 1]):
                delta = (k - k_low + 1) // 2
                j_low = j
                j += delta
                k -= delta
                counter.iterations += 1
                continue
        return CoRanks(j, k)


def co_rank(i: int, a: Sequence, b: Sequence, leq: Leq | None = None) -> CoRanks:
    """Return the co-ranks ``(j, k)`` of output rank ``i``.

    ``a`` and ``b`` must be nondecreasing under ``leq`` (default ``<=``);
    this is not checked.  ``leq`` is the only ordering needed: both the
    strict and the non-strict test are derived from it.  Runs in
    O(log min(m, n, i, m+n-i)) steps and never mutates its inputs.

    >>> co_rank(4, [1, 3, 5, 7], [2, 4, 6, 8])
    CoRanks(j=2, k=2)
    >>> co_rank(2, [2, 2], [2, 2])
    CoRanks(j=2, k=0)
    """
    return co_rank_counted(i, a, b, leq, ComparisonCounter())


def satisfies_corank_conditions(
    j: int, k: int, a: Sequence, b: Sequence, leq: Leq | None = None
) -> bool:
    """Direct evaluation of both co-rank conditions for a candidate pair."""
    if leq is None:
        leq = operator.le
    m, n = len(a), len(b)
    if not (0 <= j <= m and 0 <= k <= n):
        return False
    first = j == 0 or k == n or leq(a[j - 1], b[k])
    second = k == 0 or j == m or not leq(a[j], b[k - 1])
    return first and second


def iteration_bound(m: int, n: int, i: int) -> int:
    """``ceil(log2(max(1, min(m, n, i, m+n-i))))``: the published step bound."""
    smallest = max(1, min(m, n, i, m + n - i))
    # exact for ints: ceil(log2(x)) == (x - 1).bit_length()
    return (smallest - 1).bit_length()


def tight_iteration_bound(m: int, n: int, i: int) -> int:
    """``ceil(log2(s + 1))`` for ``s = min(m, n, i, m+n-i)``.

    One more than :func:`iteration_bound` exactly when ``s`` is a power of
    two: an interval of length 1 still costs one step to close.
    """
    return min(m, n, i, m + n - i).bit_length()

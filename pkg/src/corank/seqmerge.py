"""Stable sequential two-way merge and the tagged reference merge."""

from __future__ import annotations

import enum
import operator
from collections import deque
from dataclasses import dataclass
from typing import Any, Iterable, MutableSequence, Sequence

from .coranker import Leq

__all__ = [
    "Origin",
    "TaggedElement",
    "WriteLog",
    "oracle_merge_tagged",
    "stable_merge",
    "stable_merge_counted",
    "tag",
]


class Origin(enum.IntEnum):
    FROM_A = 0
    FROM_B = 1


@dataclass(frozen=True, eq=True)
class TaggedElement:
    """A key carrying its provenance.

    ``<`` and ``<=`` look at ``key`` only, so merging tagged elements behaves
    exactly like merging their keys; ``==`` compares all fields, so two
    merge results are equal only if the provenance order matches too.
    """

    key: Any
    origin: Origin
    index: int

    def __lt__(self, other: TaggedElement) -> bool:
        return self.key < other.key

    def __le__(self, other: TaggedElement) -> bool:
        return self.key <= other.key

    def __gt__(self, other: TaggedElement) -> bool:
        return self.key > other.key

    def __ge__(self, other: TaggedElement) -> bool:
        return self.key >= other.key


def tag(keys: Iterable, origin: Origin) -> list[TaggedElement]:
    return [TaggedElement(key, origin, t) for t, key in enumerate(keys)]


def stable_merge_counted(
    a: Sequence,
    b: Sequence,
    out: MutableSequence,
    leq: Leq | None = None,
    *,
    a_lo: int = 0,
    a_hi: int | None = None,
    b_lo: int = 0,
    b_hi: int | None = None,
    out_lo: int = 0,
    out_hi: int | None = None,
) -> int:
    """Merge ``a[a_lo:a_hi]`` and ``b[b_lo:b_hi]`` into ``out[out_lo:out_hi]``.

    Takes from ``a`` while its head is ``<=`` the head of ``b``, so equal
    keys from ``a`` come first.  Returns the number of key comparisons.
    Raises ``ValueError`` if the output range does not have exactly the
    combined input length.
    """
    if leq is None:
        leq = operator.le
    if a_hi is None:
        a_hi = len(a)
    if b_hi is None:
        b_hi = len(b)
    if out_hi is None:
        out_hi = len(out)
    if out_hi - out_lo != (a_hi - a_lo) + (b_hi - b_lo):
        raise ValueError(
            f"output length mismatch: {out_hi - out_lo} != "
            f"{a_hi - a_lo} + {b_hi - b_lo}"
        )

    x, y, t = a_lo, b_lo, out_lo
    comparisons = 0
    while x < a_hi and y < b_hi:
        comparisons += 1
        if leq(a[x], b[y]):
            out[t] = a[x]
            x += 1
        else:
            out[t] = b[y]
            y += 1
        t += 1
    while x < a_hi:
        out[t] = a[x]
        x += 1
        t += 1
    while y < b_hi:
        out[t] = b[y]
        y += 1
        t += 1
    return comparisons


def stable_merge(
    a: Sequence,
    b: Sequence,
    out: MutableSequence,
    leq: Leq | None = None,
    **ranges: int | None,
) -> None:
    """Stable two-finger merge; see :func:`stable_merge_counted` for ranges."""
    stable_merge_counted(a, b, out, leq, **ranges)


def oracle_merge_tagged(a: Sequence, b: Sequence) -> list[TaggedElement]:
    """Reference stable merge of two key lists, with provenance.

    Deliberately naive and independent of :func:`stable_merge`.  Raises
    ``ValueError`` if either input is not nondecreasing.
    """
    for name, seq in (("A", a), ("B", b)):
        for t in range(1, len(seq)):
            if seq[t] < seq[t - 1]:
                raise ValueError(f"input {name} is not sorted at index {t}")
    result: list[TaggedElement] = []
    pending_a = deque(enumerate(a))
    pending_b = deque(enumerate(b))
    while pending_a or pending_b:
        # B goes first only when strictly smaller
        if pending_b and (not pending_a or pending_b[0][1] < pending_a[0][1]):
            t, key = pending_b.popleft()
            result.append(TaggedElement(key, Origin.FROM_B, t))
        else:
            t, key = pending_a.popleft()
            result.append(TaggedElement(key, Origin.FROM_A, t))
    return result


class WriteLog:
    """Output buffer that records which worker wrote each index.

    Workers write through ``bind(r)``; every write is appended to
    ``writes`` as ``(index, worker)``.  List appends are atomic under the
    GIL, so concurrent workers may share one log.
    """

    def __init__(self, length: int) -> None:
        self.data: list[Any] = [None] * length
        self.writes: list[tuple[int, int]] = []

    def __len__(self) -> int:
        return len(self.data)

    def __getitem__(self, index):
        return self.data[index]

    def __setitem__(self, index: int, value: Any) -> None:
        self.data[index] = value
        self.writes.append((index, -1))

    def bind(self, worker: int) -> _BoundWriter:
        return _BoundWriter(self, worker)

    def writers(self) -> dict[int, list[int]]:
        """Map each written index to the workers that wrote it."""
        seen: dict[int, list[int]] = {}
        for index, worker in self.writes:
            seen.setdefault(index, []).append(worker)
        return seen


class _BoundWriter:
    __slots__ = ("_log", "_worker")

    def __init__(self, log: WriteLog, worker: int) -> None:
        self._log = log
        self._worker = worker

    def __len__(self) -> int:
        return len(self._log.data)

    def __getitem__(self, index):
        return self._log.data[index]

    def __setitem__(self, index: int, value: Any) -> None:
        self._log.data[index] = value
        self._log.writes.append((index, self._worker))

"""Perfectly load-balanced, synchronization-free parallel stable merge.

Worker ``r`` of ``p`` owns output ranks ``[floor(r*(m+n)/p),
floor((r+1)*(m+n)/p))``.  It co-ranks both ends of that range itself and
merges the two input blocks they delimit into its private output block,
so workers never wait for or talk to each other.  Block sizes differ by at
most one element.
"""

from __future__ import annotations

import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, MutableSequence, Sequence

import numpy as np

from . import _kernels
from .coranker import ComparisonCounter, Leq, co_rank, co_rank_counted
from .seqmerge import WriteLog, stable_merge_counted

__all__ = [
    "BlockAssignment",
    "MergePlan",
    "MergeReport",
    "merge_parallel",
    "merge_parallel_synced",
    "partition_output",
    "plan",
]

MODES = ("threads", "serial")


@dataclass(frozen=True)
class BlockAssignment:
    worker: int
    out_begin: int
    out_end: int
    a_begin: int
    a_end: int
    b_begin: int
    b_end: int

    @property
    def size(self) -> int:
        return self.out_end - self.out_begin


@dataclass
class MergePlan:
    p: int
    assignments: list[BlockAssignment]

    def sizes(self) -> list[int]:
        return [blk.size for blk in self.assignments]

    def check(self, m: int, n: int) -> None:
        """Raise ``AssertionError`` unless the blocks tile all three arrays."""
        assert len(self.assignments) == self.p
        out_pos = a_pos = b_pos = 0
        for r, blk in enumerate(self.assignments):
            assert blk.worker == r
            assert (blk.out_begin, blk.a_begin, blk.b_begin) == (out_pos, a_pos, b_pos)
            assert blk.a_begin <= blk.a_end and blk.b_begin <= blk.b_end
            assert blk.size == (blk.a_end - blk.a_begin) + (blk.b_end - blk.b_begin)
            out_pos, a_pos, b_pos = blk.out_end, blk.a_end, blk.b_end
        assert (out_pos, a_pos, b_pos) == (m + n, m, n)
        sizes = self.sizes()
        if sizes:
            assert max(sizes) - min(sizes) <= 1


@dataclass
class MergeReport:
    """What one merge (or one batch of repetitions) did and how long it took."""

    m: int
    n: int
    p: int
    wall_ns: int
    per_worker_sizes: list[int]
    corank_iterations: list[int] = field(default_factory=list)
    comparisons: int = 0
    corank_calls: int = 0
    verified: bool | None = None
    speedup_vs_p1: float | None = None
    wall_ns_samples: list[int] = field(default_factory=list)
    min_wall_ns: int | None = None
    diagnostic: str = ""

    @property
    def max_block(self) -> int:
        return max(self.per_worker_sizes, default=0)

    @property
    def min_block(self) -> int:
        return min(self.per_worker_sizes, default=0)


def partition_output(total: int, p: int, r: int) -> int:
    """Start rank of worker ``r``'s output block: ``floor(r * total / p)``.

    Computed as ``r*q + floor(r*rem/p)`` with ``total = q*p + rem`` so that no
    intermediate exceeds ``max(total, p*p)``.  ``r == p`` gives ``total``.
    """
    if p < 1:
        raise ValueError(f"worker count must be positive, got p={p}")
    if not 0 <= r <= p:
        raise ValueError(f"worker id r={r} not in [0, {p}]")
    q, rem = divmod(total, p)
    return r * q + (r * rem) // p


def plan(a: Sequence, b: Sequence, p: int, leq: Leq | None = None) -> MergePlan:
    """Block assignments for ``p`` workers, two independent co-ranks each."""
    total = len(a) + len(b)
    assignments = []
    for r in range(p):
        i0 = partition_output(total, p, r)
        i1 = partition_output(total, p, r + 1)
        j0, k0 = co_rank(i0, a, b, leq)
        j1, k1 = co_rank(i1, a, b, leq)
        assignments.append(BlockAssignment(r, i0, i1, j0, j1, k0, k1))
    return MergePlan(p, assignments)


def _use_kernels(a: Any, b: Any, out: Any, leq: Leq | None) -> bool:
    if leq is not None:
        return False
    if not all(isinstance(x, np.ndarray) and x.ndim == 1 for x in (a, b, out)):
        return False
    return a.dtype == b.dtype == out.dtype and a.dtype.kind in "iuf"


def _validate_args(a: Sequence, b: Sequence, out: Any, p: int, mode: str, source: Any) -> None:
    if p < 1:
        raise ValueError(f"worker count must be positive, got p={p}")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if len(out) != len(a) + len(b):
        raise ValueError(f"output length mismatch: {len(out)} != {len(a)} + {len(b)}")
    if source is not None and len(source) != len(out):
        raise ValueError("source length must equal output length")


def _as_source(source: Any, out: Any) -> tuple[np.ndarray, bool]:
    if source is None:
        return _kernels.empty_source(), False
    if not (isinstance(source, np.ndarray) and source.dtype == np.int64):
        raise TypeError("source must be an int64 numpy array")
    return source, True


def _run_tasks(tasks: list[Callable[[], Any]], mode: str, max_threads: int | None) -> list[Any]:
    if mode == "serial" or len(tasks) == 1:
        return [task() for task in tasks]
    workers = min(len(tasks), max_threads or os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(task) for task in tasks]
        return [f.result() for f in futures]


def merge_parallel(
    a: Sequence,
    b: Sequence,
    out: MutableSequence,
    p: int,
    leq: Leq | None = None,
    *,
    mode: str = "threads",
    max_threads: int | None = None,
    source: np.ndarray | None = None,
) -> MergeReport:
    """Stably merge ``a`` and ``b`` into ``out`` using ``p`` independent workers.

    ``mode="serial"`` runs the ``p`` workers one after another in the calling
    thread (same blocks, same result); ``"threads"`` runs them on a pool of
    at most ``max_threads`` threads (default: CPU count).  Numeric numpy
    arrays with the natural order use compiled kernels that release the
    GIL.  Passing an int64 ``source`` array (numeric path only) records for
    every output slot its origin: ``x`` for ``a[x]``, ``len(a) + y`` for
    ``b[y]``.
    """
    _validate_args(a, b, out, p, mode, source)
    m, n = len(a), len(b)

    if _use_kernels(a, b, out, leq):
        src, track = _as_source(source, out)

        def make_task(r: int) -> Callable[[], Any]:
            return lambda: _kernels.worker_nb(r, p, a, b, out, src, track)

    else:
        if source is not None:
            raise TypeError("source tracking needs numeric numpy arrays and the default order")

        def make_task(r: int) -> Callable[[], Any]:
            return lambda: _generic_worker(r, p, a, b, out, leq)

    tasks = [make_task(r) for r in range(p)]
    start = time.perf_counter_ns()
    results = _run_tasks(tasks, mode, max_threads)
    wall = time.perf_counter_ns() - start

    iterations: list[int] = []
    comparisons = 0
    sizes = []
    for i0, i1, _j0, _j1, _k0, _k1, s0, s1, c in results:
        sizes.append(i1 - i0)
        iterations += [s0, s1]
        comparisons += c
    return MergeReport(
        m=m,
        n=n,
        p=p,
        wall_ns=wall,
        per_worker_sizes=sizes,
        corank_iterations=iterations,
        comparisons=comparisons,
        corank_calls=2 * p,
        wall_ns_samples=[wall],
        min_wall_ns=wall,
    )


def _generic_worker(r: int, p: int, a: Sequence, b: Sequence, out: Any, leq: Leq | None):
    total = len(a) + len(b)
    i0 = partition_output(total, p, r)
    i1 = partition_output(total, p, r + 1)
    start, end = ComparisonCounter(), ComparisonCounter()
    j0, k0 = co_rank_counted(i0, a, b, leq, start)
    j1, k1 = co_rank_counted(i1, a, b, leq, end)
    view = out.bind(r) if isinstance(out, WriteLog) else out
    c = stable_merge_counted(
        a, b, view, leq, a_lo=j0, a_hi=j1, b_lo=k0, b_hi=k1, out_lo=i0, out_hi=i1
    )
    return (
        i0, i1, j0, j1, k0, k1,
        start.iterations, end.iterations,
        start.count + end.count + c,
    )


def merge_parallel_synced(
    a: Sequence,
    b: Sequence,
    out: MutableSequence,
    p: int,
    leq: Leq | None = None,
    *,
    mode: str = "threads",
    source: np.ndarray | None = None,
) -> MergeReport:
    """Variant that co-ranks only block starts and shares them via one barrier.

    Each worker computes the co-ranks of its own start rank, all workers
    meet at a single barrier, then worker ``r`` takes worker ``r+1``'s start
    as its end (the last worker uses ``(m, n)``).  ``p`` co-rank calls in
    total instead of ``2p``.  In ``"threads"`` mode every worker gets its
    own thread, since all of them must reach the barrier together.
    """
    _validate_args(a, b, out, p, mode, source)
    m, n = len(a), len(b)
    total = m + n
    fast = _use_kernels(a, b, out, leq)
    if fast:
        src, track = _as_source(source, out)
    elif source is not None:
        raise TypeError("source tracking needs numeric numpy arrays and the default order")

    starts: list[tuple[int, int, int] | None] = [None] * p
    steps = [0] * p
    comparisons = [0] * p

    def compute_start(r: int) -> None:
        i0 = partition_output(total, p, r)
        if fast:
            j, k, s, c = _kernels.co_rank_nb(i0, a, b)
        else:
            counter = ComparisonCounter()
            j, k = co_rank_counted(i0, a, b, leq, counter)
            s, c = counter.iterations, counter.count
        starts[r] = (i0, j, k)
        steps[r] = s
        comparisons[r] += c

    def merge_block(r: int) -> None:
        i0, j0, k0 = starts[r]
        i1, j1, k1 = starts[r + 1] if r + 1 < p else (total, m, n)
        if fast:
            c = _kernels.merge_block_nb(a, j0, j1, b, k0, k1, out, i0, src, track)
        else:
            view = out.bind(r) if isinstance(out, WriteLog) else out
            c = stable_merge_counted(
                a, b, view, leq, a_lo=j0, a_hi=j1, b_lo=k0, b_hi=k1, out_lo=i0, out_hi=i1
            )
        comparisons[r] += c

    start_ns = time.perf_counter_ns()
    if mode == "serial" or p == 1:
        for r in range(p):
            compute_start(r)
        for r in range(p):
            merge_block(r)
    else:
        _run_with_barrier(p, compute_start, merge_block)
    wall = time.perf_counter_ns() - start_ns

    sizes = [
        (starts[r + 1][0] if r + 1 < p else total) - starts[r][0] for r in range(p)
    ]
    return MergeReport(
        m=m,
        n=n,
        p=p,
        wall_ns=wall,
        per_worker_sizes=sizes,
        corank_iterations=steps,
        comparisons=sum(comparisons),
        corank_calls=p,
        wall_ns_samples=[wall],
        min_wall_ns=wall,
    )


def _run_with_barrier(
    p: int, phase_one: Callable[[int], None], phase_two: Callable[[int], None]
) -> None:
    barrier = threading.Barrier(p)
    errors: list[BaseException] = []

    def body(r: int) -> None:
        try:
            phase_one(r)
            barrier.wait()
            phase_two(r)
        except threading.BrokenBarrierError:
            pass
        except BaseException as exc:  # noqa: BLE001 - re-raised in caller
            errors.append(exc)
            barrier.abort()

    threads = [threading.Thread(target=body, args=(r,)) for r in range(p)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]

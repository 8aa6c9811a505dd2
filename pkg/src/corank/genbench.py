"""Sorted-input generators, merge verification and timing experiments."""

from __future__ import annotations

import csv
import enum
import operator
import statistics
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .coranker import Leq
from .parmerge import MergeReport, merge_parallel

__all__ = [
    "CSV_COLUMNS",
    "DEFAULT_VERIFY_CAP",
    "Distribution",
    "Kind",
    "MergeReport",
    "generate",
    "multiset_checksum",
    "oracle_merge_arrays",
    "parse_distribution",
    "run_experiment",
    "validate_sorted",
    "verify_merge",
    "write_csv",
]

DEFAULT_VERIFY_CAP = 1 << 20
ALL_EQUAL_KEY = 42
CSV_COLUMNS = (
    "dist", "seed", "m", "n", "p", "rep", "wall_ns", "comparisons",
    "max_block", "min_block", "verified", "speedup",
)
_U64_MAX = np.iinfo(np.uint64).max
_HALF = np.uint64(1 << 63)


class Kind(enum.Enum):
    UNIFORM_RANDOM = "uniform"
    ALL_EQUAL = "all-equal"
    FEW_DISTINCT = "few-distinct"
    DISJOINT_AB = "disjoint"
    INTERLEAVED_STRICT = "interleaved"
    ORGAN_PIPE = "organ-pipe"
    RUNS_OF_EQUAL = "runs"


@dataclass(frozen=True)
class Distribution:
    """Input family plus seed.

    ``param`` is the number of distinct keys for ``FEW_DISTINCT`` and the
    run length for ``RUNS_OF_EQUAL``; other kinds ignore it.
    """

    kind: Kind
    seed: int = 0
    param: int = 4

    @property
    def name(self) -> str:
        if self.kind in (Kind.FEW_DISTINCT, Kind.RUNS_OF_EQUAL):
            return f"{self.kind.value}:{self.param}"
        return self.kind.value


def parse_distribution(text: str, seed: int = 0) -> Distribution:
    """Parse ``uniform``, ``few-distinct:8``, ``runs:16`` and the like."""
    name, _, arg = text.partition(":")
    try:
        kind = Kind(name)
    except ValueError:
        known = ", ".join(k.value for k in Kind)
        raise ValueError(f"unknown distribution {name!r} (known: {known})") from None
    if arg:
        param = int(arg)
        if param < 1:
            raise ValueError(f"distribution parameter must be positive, got {param}")
        return Distribution(kind, seed, param)
    return Distribution(kind, seed)


def _sorted_uniform(rng: np.random.Generator, size: int, low: int, high: int) -> np.ndarray:
    keys = rng.integers(low, high, size=size, dtype=np.uint64, endpoint=True)
    keys.sort()
    return keys


def _deal(rng: np.random.Generator, merged: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Split a sorted stream into order-preserving subsequences of sizes m, n."""
    to_a = np.zeros(merged.shape[0], dtype=bool)
    to_a[rng.choice(merged.shape[0], size=m, replace=False)] = True
    return merged[to_a].copy(), merged[~to_a].copy()


def generate(dist: Distribution, m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Two sorted uint64 arrays of lengths ``m`` and ``n``.

    Deterministic in ``(dist, m, n)``.

    - ``UNIFORM_RANDOM``: independent uniform keys over the full 64-bit range.
    - ``ALL_EQUAL``: every key is 42.
    - ``FEW_DISTINCT``: uniform over ``param`` distinct keys.
    - ``DISJOINT_AB``: all of A lies below 2**63, all of B at or above.
    - ``INTERLEAVED_STRICT``: A gets the even, B the odd keys from a random
      offset, so the merge alternates strictly while both last.
    - ``ORGAN_PIPE``: A holds a low and a high band, B the middle band, so
      the merge reads A, then B, then A again.
    - ``RUNS_OF_EQUAL``: a sorted stream of runs of ``param`` equal keys,
      dealt randomly between A and B.
    """
    if m < 0 or n < 0:
        raise ValueError("array lengths must be nonnegative")
    if not isinstance(dist.kind, Kind):
        raise ValueError(f"unknown distribution kind {dist.kind!r}")
    rng = np.random.default_rng(dist.seed)
    kind = dist.kind

    if kind is Kind.UNIFORM_RANDOM:
        return _sorted_uniform(rng, m, 0, int(_U64_MAX)), _sorted_uniform(rng, n, 0, int(_U64_MAX))
    if kind is Kind.ALL_EQUAL:
        return np.full(m, ALL_EQUAL_KEY, dtype=np.uint64), np.full(n, ALL_EQUAL_KEY, dtype=np.uint64)
    if kind is Kind.FEW_DISTINCT:
        d = dist.param
        return _sorted_uniform(rng, m, 0, d - 1), _sorted_uniform(rng, n, 0, d - 1)
    if kind is Kind.DISJOINT_AB:
        half = int(_HALF)
        return _sorted_uniform(rng, m, 0, half - 1), _sorted_uniform(rng, n, half, int(_U64_MAX))
    if kind is Kind.INTERLEAVED_STRICT:
        offset = np.uint64(2 * int(rng.integers(0, 1 << 40)))
        a = offset + 2 * np.arange(m, dtype=np.uint64)
        b = offset + 2 * np.arange(n, dtype=np.uint64) + np.uint64(1)
        return a, b
    if kind is Kind.ORGAN_PIPE:
        low_count = (m + 1) // 2
        third = (1 << 64) // 3
        low = _sorted_uniform(rng, low_count, 0, third - 1)
        high = _sorted_uniform(rng, m - low_count, 2 * third, int(_U64_MAX))
        middle = _sorted_uniform(rng, n, third, 2 * third - 1)
        return np.concatenate([low, high]), middle
    if kind is Kind.RUNS_OF_EQUAL:
        stream = np.arange(m + n, dtype=np.uint64) // np.uint64(dist.param)
        return _deal(rng, stream, m)
    raise ValueError(f"unknown distribution kind {kind!r}")


def validate_sorted(view: Sequence, leq: Leq | None = None) -> bool:
    """True iff ``view`` is nondecreasing under ``leq`` (default ``<=``)."""
    if leq is None and isinstance(view, np.ndarray):
        return bool(np.all(view[:-1] <= view[1:])) if view.shape[0] > 1 else True
    if leq is None:
        leq = operator.le
    return all(leq(view[t - 1], view[t]) for t in range(1, len(view)))


def oracle_merge_arrays(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stable merge of two arrays via numpy's stable sort.

    Returns ``(keys, source)`` where ``source`` uses the same encoding as
    ``merge_parallel(..., source=...)``.  A precedes B in the concatenation,
    so a stable sort puts equal A keys first.
    """
    both = np.concatenate([a, b])
    order = np.argsort(both, kind="stable").astype(np.int64)
    return both[order], order


def multiset_checksum(keys: np.ndarray) -> tuple[int, int, int]:
    """Order-independent fingerprint: count, wrapping sum, wrapping mixed-sum."""
    x = keys.astype(np.uint64, copy=True)
    with np.errstate(over="ignore"):
        plain = int(x.sum(dtype=np.uint64))
        # splitmix64 finalizer
        x ^= x >> np.uint64(30)
        x *= np.uint64(0xBF58476D1CE4E5B9)
        x ^= x >> np.uint64(27)
        x *= np.uint64(0x94D049BB133111EB)
        x ^= x >> np.uint64(31)
        mixed = int(x.sum(dtype=np.uint64))
    return keys.shape[0], plain, mixed


def verify_merge(
    a: np.ndarray,
    b: np.ndarray,
    out: np.ndarray,
    source: np.ndarray | None = None,
    cap: int = DEFAULT_VERIFY_CAP,
) -> tuple[bool, str]:
    """Check ``out`` (and optionally its provenance) against the stable merge.

    Up to ``cap`` elements the result is compared exactly with the oracle;
    above it, only sortedness and the multiset checksum are checked.
    Returns ``(ok, diagnostic)``.
    """
    total = a.shape[0] + b.shape[0]
    if out.shape[0] != total:
        return False, f"length mismatch: {out.shape[0]} != {total}"
    if total <= cap:
        keys, order = oracle_merge_arrays(a, b)
        if not np.array_equal(out, keys):
            bad = int(np.flatnonzero(out != keys)[0])
            return False, f"key mismatch at output index {bad}"
        if source is not None and not np.array_equal(source, order):
            bad = int(np.flatnonzero(source != order)[0])
            return False, f"stability violated at output index {bad}"
        return True, ""
    if not validate_sorted(out):
        bad = int(np.flatnonzero(out[:-1] > out[1:])[0])
        return False, f"output not sorted at index {bad}"
    if multiset_checksum(out) != multiset_checksum(np.concatenate([a, b])):
        return False, "multiset checksum mismatch"
    return True, ""


def run_experiment(
    dist: Distribution,
    m: int,
    n: int,
    p_list: Iterable[int],
    repetitions: int,
    *,
    verify_cap: int = DEFAULT_VERIFY_CAP,
    mode: str = "threads",
) -> list[MergeReport]:
    """Time ``merge_parallel`` for each ``p``; one aggregated report per ``p``.

    Every repetition's output is verified; below ``verify_cap`` one extra
    run per ``p`` also checks provenance (stability).  ``wall_ns`` is the
    median over repetitions, ``min_wall_ns`` the minimum, and
    ``speedup_vs_p1`` the ratio of medians against the ``p=1`` entry of the
    same batch (``None`` when ``p=1`` is absent).
    """
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    p_list = list(p_list)
    try:
        a, b = generate(dist, m, n)
    except Exception as exc:  # noqa: BLE001 - reported, not raised
        return [
            MergeReport(
                m, n, p, 0, [], verified=False, wall_ns_samples=[0],
                diagnostic=f"generation failed: {exc}",
            )
            for p in p_list
        ]

    reports = []
    for p in p_list:
        samples = []
        verified = True
        diagnostic = ""
        last = None
        for _ in range(repetitions):
            out = np.empty(m + n, dtype=a.dtype)
            last = merge_parallel(a, b, out, p, mode=mode)
            samples.append(last.wall_ns)
            ok, why = verify_merge(a, b, out, cap=verify_cap)
            if not ok and verified:
                verified, diagnostic = False, why
        if verified and m + n <= verify_cap:
            out = np.empty(m + n, dtype=a.dtype)
            source = np.empty(m + n, dtype=np.int64)
            merge_parallel(a, b, out, p, mode=mode, source=source)
            verified, diagnostic = verify_merge(a, b, out, source, cap=verify_cap)
        reports.append(
            MergeReport(
                m=m,
                n=n,
                p=p,
                wall_ns=int(statistics.median(samples)),
                per_worker_sizes=last.per_worker_sizes,
                corank_iterations=last.corank_iterations,
                comparisons=last.comparisons,
                corank_calls=last.corank_calls,
                verified=verified,
                wall_ns_samples=samples,
                min_wall_ns=min(samples),
                diagnostic=diagnostic,
            )
        )

    base = next((r for r in reports if r.p == 1), None)
    for report in reports:
        if report is base:
            report.speedup_vs_p1 = 1.0
        elif base is not None and report.wall_ns > 0:
            report.speedup_vs_p1 = base.wall_ns / report.wall_ns
    return reports


def write_csv(
    stream: IO[str], dist: Distribution, reports: Sequence[MergeReport], header: bool = True
) -> int:
    """Write one row per (p, repetition); returns the number of rows."""
    writer = csv.writer(stream, lineterminator="\n")
    if header:
        writer.writerow(CSV_COLUMNS)
    rows = 0
    for report in reports:
        speedup = "" if report.speedup_vs_p1 is None else f"{report.speedup_vs_p1:.6g}"
        for rep, wall in enumerate(report.wall_ns_samples):
            writer.writerow([
                dist.name, dist.seed, report.m, report.n, report.p, rep, wall,
                report.comparisons, report.max_block, report.min_block,
                "true" if report.verified else "false", speedup,
            ])
            rows += 1
    return rows

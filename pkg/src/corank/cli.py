"""Command-line front end: ``corank {corank,merge,verify,bench}``.

Exit codes: 0 success, 1 verification failure, 2 usage or contract error,
3 I/O error.

Key files hold unsigned 64-bit integers, either as text (one decimal per
line) or in the binary ``CRMG`` layout::

    b"CRMG" | version: u8 = 1 | flags: u8 | count: u64 LE | count x u64 LE
"""

from __future__ import annotations

import argparse
import struct
import sys
from contextlib import nullcontext
from pathlib import Path
from typing import Sequence

import numpy as np

from . import genbench
from .coranker import ComparisonCounter, RankError, co_rank_counted
from .parmerge import merge_parallel, merge_parallel_synced

MAGIC = b"CRMG"
VERSION = 1
_HEADER = struct.Struct("<4sBBQ")

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_IO = 3


class CliError(Exception):
    def __init__(self, message: str, code: int) -> None:
        super().__init__(message)
        self.code = code


class FormatError(ValueError):
    """Raised for a key file that cannot be decoded."""


def read_keys(path: str | Path) -> tuple[np.ndarray, str]:
    """Load a key file; returns ``(keys, fmt)`` with ``fmt`` "binary" or "text"."""
    data = Path(path).read_bytes()
    if data[:4] == MAGIC:
        if len(data) < _HEADER.size:
            raise FormatError(f"{path}: truncated header")
        _, version, _flags, count = _HEADER.unpack_from(data)
        if version != VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        payload = len(data) - _HEADER.size
        if payload != 8 * count:
            raise FormatError(f"{path}: header declares {count} keys, payload holds {payload / 8:g}")
        return np.frombuffer(data, dtype="<u8", offset=_HEADER.size).astype(np.uint64), "binary"

    keys = []
    for lineno, line in enumerate(data.decode("ascii", errors="replace").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            value = int(line, 10)
        except ValueError:
            raise FormatError(f"{path}:{lineno}: not a decimal integer: {line!r}") from None
        if not 0 <= value < 1 << 64:
            raise FormatError(f"{path}:{lineno}: {value} is not an unsigned 64-bit key")
        keys.append(value)
    return np.array(keys, dtype=np.uint64), "text"


def write_keys(path: str | Path, keys: np.ndarray, fmt: str) -> None:
    if fmt == "binary":
        header = _HEADER.pack(MAGIC, VERSION, 0, keys.shape[0])
        Path(path).write_bytes(header + keys.astype("<u8").tobytes())
    else:
        text = "".join(f"{int(k)}\n" for k in keys)
        Path(path).write_text(text, encoding="ascii")


def _load(path: str, validate: bool = True) -> tuple[np.ndarray, str]:
    try:
        keys, fmt = read_keys(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_IO) from exc
    except FormatError as exc:
        raise CliError(str(exc), EXIT_IO) from exc
    if validate and not genbench.validate_sorted(keys):
        raise CliError(f"{path}: keys are not sorted", EXIT_USAGE)
    return keys, fmt


def cmd_corank(args: argparse.Namespace) -> int:
    a, _ = _load(args.file_a, not args.no_validate)
    b, _ = _load(args.file_b, not args.no_validate)
    counter = ComparisonCounter()
    try:
        j, k = co_rank_counted(args.rank, a, b, None, counter)
    except RankError as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc
    print(j, k, counter.iterations, counter.count)
    return EXIT_OK


def cmd_merge(args: argparse.Namespace) -> int:
    a, fmt = _load(args.file_a, not args.no_validate)
    b, _ = _load(args.file_b, not args.no_validate)
    if args.threads < 1:
        raise CliError("--threads must be at least 1", EXIT_USAGE)
    out = np.empty(a.shape[0] + b.shape[0], dtype=np.uint64)
    merge = merge_parallel_synced if args.synced else merge_parallel
    report = merge(a, b, out, args.threads, mode=args.mode)
    try:
        write_keys(args.output, out, args.format or fmt)
    except OSError as exc:
        raise CliError(f"cannot write {args.output}: {exc.strerror or exc}", EXIT_IO) from exc
    print(
        f"m={report.m} n={report.n} p={report.p} wall_ns={report.wall_ns} "
        f"comparisons={report.comparisons} corank_calls={report.corank_calls} "
        f"block_min={report.min_block} block_max={report.max_block}"
    )
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    a, _ = _load(args.file_a)
    b, _ = _load(args.file_b)
    merged, _ = _load(args.merged, validate=False)
    ok, why = genbench.verify_merge(a, b, merged, cap=sys.maxsize)
    if not ok:
        print(why, file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _parse_p_list(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise CliError(f"bad --p-list {text!r}", EXIT_USAGE) from None
    if not values or min(values) < 1:
        raise CliError("--p-list needs positive worker counts", EXIT_USAGE)
    return values


def cmd_bench(args: argparse.Namespace) -> int:
    try:
        dist = genbench.parse_distribution(args.dist, args.seed)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc
    if args.m < 0 or args.n < 0 or args.reps < 1:
        raise CliError("--m/--n must be nonnegative and --reps positive", EXIT_USAGE)
    reports = genbench.run_experiment(
        dist, args.m, args.n, _parse_p_list(args.p_list), args.reps,
        verify_cap=args.verify_cap, mode=args.mode,
    )
    target = open(args.csv, "w", newline="") if args.csv else nullcontext(sys.stdout)
    try:
        with target as stream:
            genbench.write_csv(stream, dist, reports)
    except OSError as exc:
        raise CliError(f"cannot write {args.csv}: {exc.strerror or exc}", EXIT_IO) from exc
    failed = [r for r in reports if not r.verified]
    for r in failed:
        print(f"p={r.p}: unverified: {r.diagnostic}", file=sys.stderr)
    return EXIT_VERIFY if failed else EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 already; keep its message
        self.print_usage(sys.stderr)
        raise CliError(message, EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="corank", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("corank", help="print 'j k iterations comparisons' for a rank")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("rank", type=int)
    p.add_argument("--no-validate", action="store_true", help="skip the sortedness check")
    p.set_defaults(func=cmd_corank)

    p = sub.add_parser("merge", help="merge two key files in parallel")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("output")
    p.add_argument("--threads", "-p", type=int, default=1, help="worker count")
    p.add_argument("--mode", choices=("threads", "serial"), default="threads")
    p.add_argument("--synced", action="store_true", help="one co-rank per worker plus a barrier")
    p.add_argument("--format", choices=("text", "binary"), help="output format (default: as file_a)")
    p.add_argument("--no-validate", action="store_true", help="skip the sortedness check")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("verify", help="exit 0 iff MERGED is the stable merge of A and B")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("merged")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="timing and verification runs, CSV output")
    p.add_argument("--dist", default="uniform", help="e.g. uniform, all-equal, few-distinct:8, runs:16")
    p.add_argument("--m", type=int, default=1_000_000)
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--p-list", default="1,2,4")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", help="output path (default: stdout)")
    p.add_argument("--verify-cap", type=int, default=genbench.DEFAULT_VERIFY_CAP)
    p.add_argument("--mode", choices=("threads", "serial"), default="threads")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"corank: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())

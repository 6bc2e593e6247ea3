"""Command line interface: ``mmscheme <command> ...``."""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence, Union

import numpy as np

from . import catalog
from .cse import ReductionConfig, TieBreak, reduce_scheme
from .engine import OpMeter, bench, format_bench, padded_size, recursive_multiply, ring_from_name
from .errors import SchemeError
from .formats import emit_slp, parse_scheme, parse_slp, serialize_scheme
from .model import (
    BilinearScheme,
    StraightLineProgram,
    naive_addition_count,
    scheme_to_naive_slp,
    slp_addition_count,
)
from .verify import extract_scheme, random_check, verify_scheme, verify_slp

Loaded = Union[BilinearScheme, StraightLineProgram]


class UsageError(Exception):
    pass


def _dims(text: Optional[str]):
    if text is None:
        return None
    try:
        dims = tuple(int(x) for x in text.replace("x", ",").split(","))
    except ValueError:
        raise UsageError(f"bad --dims {text!r}; expected n,m,p") from None
    if len(dims) != 3:
        raise UsageError(f"bad --dims {text!r}; expected n,m,p")
    return dims


def load(source: str, dims=None) -> Loaded:
    """Resolve a builtin name or read a coefficient file / program text."""
    if source in catalog.NAMES:
        return catalog.builtin(source)
    if not os.path.exists(source):
        raise UsageError(f"{source}: no such builtin or file (builtins: {', '.join(catalog.NAMES)})")
    with open(source, encoding="utf-8") as fh:
        text = fh.read()
    if "=" in text:
        return parse_slp(text, dims)
    return parse_scheme(text, dims, name=os.path.basename(source))


def as_slp(obj: Loaded) -> StraightLineProgram:
    return obj if isinstance(obj, StraightLineProgram) else scheme_to_naive_slp(obj)


def as_scheme(obj: Loaded) -> BilinearScheme:
    return obj if isinstance(obj, BilinearScheme) else extract_scheme(obj)


def _write(text: str, path: Optional[str]):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_verify(args) -> int:
    obj = load(args.source, _dims(args.dims))
    if args.mod is not None:
        result = random_check(obj, args.mod, args.trials, args.seed)
        if result.passed:
            print(f"Pass ({result.trials} trials mod {args.mod})")
            return 0
        A, B = result.witness
        print(f"Fail (trial {result.trials} mod {args.mod})")
        print(f"  A = {A}")
        print(f"  B = {B}")
        return 1
    report = verify_scheme(obj) if isinstance(obj, BilinearScheme) else verify_slp(obj)
    print(report.summary())
    for f in report.failures:
        print(f"  A{f.a}*B{f.b} in C{f.c}: got {f.computed}, expected {f.expected}")
    return 0 if report.valid else 1


def _count_text(obj: Loaded) -> str:
    if isinstance(obj, BilinearScheme):
        rep = naive_addition_count(obj)
        lines = [
            f"additions: {rep.adds_total} (A:{rep.adds_A} B:{rep.adds_B} C:{rep.adds_C}), "
            f"multiplications: {rep.muls}"
        ]
    else:
        rep = slp_addition_count(obj)
        lines = [
            f"additions: {rep.adds_total}, multiplications: {rep.muls}",
            f"by side: A:{rep.adds_A} B:{rep.adds_B} C:{rep.adds_C}",
        ]
    if rep.scales:
        lines.append(f"scalar multiplications: {rep.scales}")
    return "\n".join(lines) + "\n"


def cmd_count(args) -> int:
    sys.stdout.write(_count_text(load(args.source, _dims(args.dims))))
    return 0


def cmd_reduce(args) -> int:
    scheme = as_scheme(load(args.source, _dims(args.dims)))
    if args.restarts > 1 or args.tie_break == "random":
        config = ReductionConfig(TieBreak.SEEDED_RANDOM, seed=args.seed, restarts=args.restarts)
    else:
        config = ReductionConfig()
    slp, report = reduce_scheme(scheme, config)
    temps = report.temporaries
    print(f"policy: {config.policy} ({config.tie_break.value})")
    print(f"naive additions: {report.input_naive_additions}")
    print(f"reduced additions: {report.output_additions}")
    print("temporaries: " + " ".join(f"{k}:{v}" for k, v in temps.items()))
    if report.seed_used is not None:
        print(f"best seed: {report.seed_used}")
    if args.emit_slp:
        _write(emit_slp(slp), args.emit_slp)
    return 0


def cmd_emit(args) -> int:
    obj = load(args.source, _dims(args.dims))
    if args.format == "slp":
        text = emit_slp(as_slp(obj))
    else:
        text = serialize_scheme(as_scheme(obj)) + "\n"
    _write(text, args.output)
    return 0


def cmd_multiply(args) -> int:
    slp = as_slp(load(args.scheme))
    ring = ring_from_name(args.ring)
    rng = np.random.default_rng(args.seed)
    A = ring.random(rng, (args.size, args.size))
    B = ring.random(rng, (args.size, args.size))
    meter = OpMeter()
    C = recursive_multiply(A, B, slp, args.threshold, ring, meter)
    agree = ring.equal(C, ring.matmul(A, B))
    padded = padded_size(args.size, slp.dims[0], args.threshold)
    print(f"size {args.size} (padded {padded}), ring {ring.name}, threshold {args.threshold}")
    print(f"agrees with naive multiplication: {'yes' if agree else 'NO'}")
    print(
        f"scalar additions: {meter.scalar_adds}, multiplications: {meter.scalar_muls}, "
        f"scalings: {meter.scalar_scales}, time: {meter.wall_time * 1e3:.3f} ms"
    )
    return 0 if agree else 1


def cmd_bench(args) -> int:
    slp = as_slp(load(args.scheme))
    try:
        sizes = [int(x) for x in args.sizes.split(",")]
    except ValueError:
        raise UsageError(f"bad --sizes {args.sizes!r}") from None
    rows = bench(slp, sizes, ring_from_name(args.ring), args.repetitions, args.seed, args.threshold)
    sys.stdout.write(format_bench(rows, args.delimiter))
    for row in rows:
        if not row.correct:
            print(f"size {row.size}: result disagrees with naive multiplication", file=sys.stderr)
            return 1
    return 0


def cmd_builtins(args) -> int:
    for name in catalog.NAMES:
        obj = catalog.builtin(name)
        if isinstance(obj, BilinearScheme):
            kind, adds = "scheme", naive_addition_count(obj).adds_total
        else:
            kind, adds = "program", slp_addition_count(obj).adds_total
        dims = "x".join(map(str, obj.dims))
        print(f"{name:<20} {kind:<8} dims {dims}  rank {obj.rank:<3} additions {adds}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmscheme", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check a scheme or program exactly (or mod p)")
    p.add_argument("source")
    p.add_argument("--dims")
    p.add_argument("--mod", type=int, help="randomized check modulo this prime")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("count", help="count additions and multiplications")
    p.add_argument("source")
    p.add_argument("--dims")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("reduce", help="greedy addition reduction")
    p.add_argument("source")
    p.add_argument("--dims")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--tie-break", choices=("deterministic", "random"), default="deterministic")
    p.add_argument("--emit-slp", metavar="PATH", help="write the program text ('-' for stdout)")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("emit", help="convert between program text and coefficient files")
    p.add_argument("source")
    p.add_argument("--dims")
    p.add_argument("--format", choices=("slp", "scheme-file"), default="slp")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_emit)

    p = sub.add_parser("multiply", help="recursive multiplication against the naive product")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--threshold", type=int, default=27)
    p.add_argument("--ring", default="int64")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scheme", default="stapleton59-slp")
    p.set_defaults(func=cmd_multiply)

    p = sub.add_parser("bench", help="benchmark rows for several sizes")
    p.add_argument("--sizes", default="3,9,27,81")
    p.add_argument("--scheme", default="stapleton59-slp")
    p.add_argument("--ring", default="int64")
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=int, default=1)
    p.add_argument("--delimiter", default=",")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("builtins", help="list the embedded schemes")
    p.set_defaults(func=cmd_builtins)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SchemeError, UsageError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

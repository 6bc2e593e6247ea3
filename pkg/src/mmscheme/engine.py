"""Execution of straight-line programs on matrices, with exact op counting.

Matrices are numpy arrays of shape ``(..., rows, cols)``.  Leading axes are
a batch of independent multiplications carried out in lockstep; meters count
the scalar operations of a single multiplication, so batching never changes
the reported counts.
"""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DegenerateRecursionError, ParameterError, RingOverflowError, ShapeError
from .model import Kind, Lin, Mul, StraightLineProgram, slp_addition_count
from .verify import is_prime

# --------------------------------------------------------------------------
# Rings


class ScalarRing:
    """Elementwise arithmetic on arrays over one scalar ring."""

    name = "ring"
    exact = True
    dtype: object = object

    def array(self, values) -> np.ndarray:
        return np.asarray(values, dtype=self.dtype)

    def zeros(self, shape) -> np.ndarray:
        return np.zeros(shape, dtype=self.dtype)

    def add(self, x, y):
        return x + y

    def sub(self, x, y):
        return x - y

    def mul(self, x, y):
        return x * y

    def neg(self, x):
        return -x

    def scale(self, c: Fraction, x):
        raise NotImplementedError

    def matmul(self, x, y):
        """Schoolbook product over the trailing two axes."""
        acc = self.mul(x[..., :, 0:1], y[..., 0:1, :])
        for k in range(1, x.shape[-1]):
            acc = self.add(acc, self.mul(x[..., :, k : k + 1], y[..., k : k + 1, :]))
        return acc

    def equal(self, x, y) -> bool:
        return x.shape == y.shape and bool(np.all(x == y))

    def random(self, rng: np.random.Generator, shape, low: int = -10, high: int = 10):
        return self.array(rng.integers(low, high + 1, size=shape))


class RationalRing(ScalarRing):
    name = "rational"

    def array(self, values):
        return np.vectorize(Fraction, otypes=[object])(np.asarray(values, dtype=object))

    def zeros(self, shape):
        return self.array(np.zeros(shape, dtype=np.int64))

    def scale(self, c, x):
        return Fraction(c) * x

    def matmul(self, x, y):
        return np.matmul(x, y)


_I64 = np.iinfo(np.int64)


class CheckedInt64Ring(ScalarRing):
    """64-bit integers; any wraparound raises RingOverflowError."""

    name = "int64"
    dtype = np.int64

    def array(self, values):
        arr = np.asarray(values)
        if arr.dtype == object:
            if arr.size and (max(arr.ravel()) > _I64.max or min(arr.ravel()) < _I64.min):
                raise RingOverflowError("value out of int64 range")
        return arr.astype(np.int64)

    def add(self, x, y):
        with np.errstate(over="ignore"):
            r = x + y
        if np.any(((x ^ r) & (y ^ r)) < 0):
            raise RingOverflowError("int64 addition overflow")
        return r

    def sub(self, x, y):
        with np.errstate(over="ignore"):
            r = x - y
        if np.any(((x ^ y) & (x ^ r)) < 0):
            raise RingOverflowError("int64 subtraction overflow")
        return r

    def mul(self, x, y):
        x, y = np.broadcast_arrays(x, y)
        with np.errstate(over="ignore"):
            r = x * y
            safe_x = np.where(x == 0, 1, x)
            back = np.where(x == 0, y, r // safe_x)
        bad = (back != y) | ((x == -1) & (y == _I64.min)) | ((y == -1) & (x == _I64.min))
        if np.any(bad):
            raise RingOverflowError("int64 multiplication overflow")
        return r

    def neg(self, x):
        if np.any(x == _I64.min):
            raise RingOverflowError("int64 negation overflow")
        return -x

    def scale(self, c, x):
        c = Fraction(c)
        if c.denominator != 1:
            raise ParameterError(f"coefficient {c} is not an integer")
        return self.mul(np.asarray(c.numerator, dtype=np.int64), x)


class PrimeFieldRing(ScalarRing):
    """Integers modulo a prime below 2**31, so products fit in int64."""

    dtype = np.int64

    def __init__(self, p: int):
        if not is_prime(p) or p >= 2**31:
            raise ParameterError(f"modulus must be a prime below 2**31, got {p}")
        self.p = p
        self.name = f"modp:{p}"

    def array(self, values):
        return np.mod(np.asarray(values, dtype=object), self.p).astype(np.int64)

    def add(self, x, y):
        return (x + y) % self.p

    def sub(self, x, y):
        return (x - y) % self.p

    def mul(self, x, y):
        return (x * y) % self.p

    def neg(self, x):
        return (-x) % self.p

    def scale(self, c, x):
        c = Fraction(c)
        if c.denominator % self.p == 0:
            raise ParameterError(f"coefficient {c} is undefined modulo {self.p}")
        k = c.numerator * pow(c.denominator, -1, self.p) % self.p
        return (k * x) % self.p


class FloatRing(ScalarRing):
    """Double precision; results are approximate."""

    name = "f64"
    exact = False
    dtype = np.float64

    def scale(self, c, x):
        return float(c) * x

    def matmul(self, x, y):
        return np.matmul(x, y)

    def equal(self, x, y):
        return x.shape == y.shape and bool(np.allclose(x, y))

    def random(self, rng, shape, low=-1, high=1):
        return rng.uniform(low, high, size=shape)


def ring_from_name(spec: str) -> ScalarRing:
    if spec == "rational":
        return RationalRing()
    if spec == "int64":
        return CheckedInt64Ring()
    if spec == "f64":
        return FloatRing()
    if spec.startswith("modp:"):
        try:
            return PrimeFieldRing(int(spec[5:]))
        except ValueError:
            raise ParameterError(f"bad modulus in {spec!r}") from None
    raise ParameterError(f"unknown ring {spec!r}; use rational, int64, f64 or modp:P")


# --------------------------------------------------------------------------
# Metering


@dataclass
class OpMeter:
    scalar_adds: int = 0
    scalar_muls: int = 0
    scalar_scales: int = 0
    wall_time: float = 0.0


class MeteredRing(ScalarRing):
    """Wraps a ring and counts every scalar operation it performs.

    ``batch`` is the number of independent caller-level multiplications
    stacked on leading axes; counts are divided by it.
    """

    def __init__(self, ring: ScalarRing, meter: OpMeter, batch: int = 1):
        self.ring = ring
        self.meter = meter
        self.batch = batch
        self.name = ring.name
        self.exact = ring.exact
        self.dtype = ring.dtype

    def _size(self, x) -> int:
        return int(np.size(x)) // self.batch

    def array(self, values):
        return self.ring.array(values)

    def zeros(self, shape):
        return self.ring.zeros(shape)

    def add(self, x, y):
        r = self.ring.add(x, y)
        self.meter.scalar_adds += self._size(r)
        return r

    def sub(self, x, y):
        r = self.ring.sub(x, y)
        self.meter.scalar_adds += self._size(r)
        return r

    def mul(self, x, y):
        r = self.ring.mul(x, y)
        self.meter.scalar_muls += self._size(r)
        return r

    def neg(self, x):
        self.meter.scalar_scales += self._size(x)
        return self.ring.neg(x)

    def scale(self, c, x):
        self.meter.scalar_scales += self._size(x)
        return self.ring.scale(c, x)

    def matmul(self, x, y):
        n, k = x.shape[-2:]
        p = y.shape[-1]
        lead = int(np.prod(np.broadcast_shapes(x.shape[:-2], y.shape[:-2]))) // self.batch
        r = self.ring.matmul(x, y)
        self.meter.scalar_muls += lead * n * k * p
        self.meter.scalar_adds += lead * n * (k - 1) * p
        return r

    def equal(self, x, y):
        return self.ring.equal(x, y)

    def random(self, rng, shape, *args, **kwargs):
        return self.ring.random(rng, shape, *args, **kwargs)


# --------------------------------------------------------------------------
# Padding


def pad(x: np.ndarray, rows: int, cols: int, ring: ScalarRing) -> np.ndarray:
    """Zero-pad the trailing two axes up to ``rows x cols``."""
    r, c = x.shape[-2:]
    if (r, c) == (rows, cols):
        return x
    if r > rows or c > cols:
        raise ShapeError(f"cannot pad {r}x{c} down to {rows}x{cols}")
    out = ring.zeros(x.shape[:-2] + (rows, cols))
    out[..., :r, :c] = x
    return out


def unpad(x: np.ndarray, rows: int, cols: int) -> np.ndarray:
    return x[..., :rows, :cols]


def _round_up(x: int, k: int) -> int:
    return -(-x // k) * k


# --------------------------------------------------------------------------
# Execution


def _lin(ring: ScalarRing, c1: Fraction, x, c2: Fraction, y):
    """``c1*x + c2*y`` with one addition and as few scalings as possible."""
    if c1 == 1 or c2 == 1:
        if c1 != 1:
            c1, x, c2, y = c2, y, c1, x
        if c2 == 1:
            return ring.add(x, y)
        if c2 == -1:
            return ring.sub(x, y)
        return ring.add(x, ring.scale(c2, y))
    if c1 == -1 and c2 == -1:
        return ring.neg(ring.add(x, y))
    if c1 == -1:
        return ring.sub(ring.scale(c2, y), x)
    if c2 == -1:
        return ring.sub(ring.scale(c1, x), y)
    return ring.add(ring.scale(c1, x), ring.scale(c2, y))


def _batch_size(A: np.ndarray, B: np.ndarray) -> int:
    return int(np.prod(np.broadcast_shapes(A.shape[:-2], B.shape[:-2])))


def eval_slp(
    slp: StraightLineProgram,
    A: np.ndarray,
    B: np.ndarray,
    ring: ScalarRing,
    mul: Optional[Callable] = None,
    meter: Optional[OpMeter] = None,
    mul_many: Optional[Callable] = None,
) -> np.ndarray:
    """Compute ``A @ B`` by running ``slp`` on blocks of the inputs.

    Inputs are zero-padded so that the block grid matches the program's
    dims; the result is stripped back to the logical shape.  Each product
    goes to ``mul`` (schoolbook multiplication by default).  ``mul_many``,
    if given, receives the lists of all left and right operands at once and
    returns the list of products; kinds guarantee every operand is ready
    before the first product is needed.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    if A.ndim < 2 or B.ndim < 2 or A.shape[-1] != B.shape[-2]:
        raise ShapeError(f"cannot multiply shapes {A.shape} and {B.shape}")
    if meter is not None:
        ring = MeteredRing(ring, meter, _batch_size(A, B))
    kinds = slp.check_kinds()
    n, m, p = slp.dims
    rows, inner, cols = A.shape[-2], A.shape[-1], B.shape[-1]
    R, K, P = _round_up(rows, n), _round_up(inner, m), _round_up(cols, p)
    A = pad(A, R, K, ring)
    B = pad(B, K, P, ring)
    bh, bk, bw = R // n, K // m, P // p
    values = {}
    for i in range(n):
        for j in range(m):
            values[f"A{m * i + j}"] = A[..., i * bh : (i + 1) * bh, j * bk : (j + 1) * bk]
    for j in range(m):
        for t in range(p):
            values[f"B{p * j + t}"] = B[..., j * bk : (j + 1) * bk, t * bw : (t + 1) * bw]

    def run(ins):
        if isinstance(ins, Lin):
            values[ins.dst] = _lin(ring, ins.c1, values[ins.src1], ins.c2, values[ins.src2])
        elif ins.c == -1:
            values[ins.dst] = ring.neg(values[ins.src])
        else:
            values[ins.dst] = ring.scale(ins.c, values[ins.src])

    products = slp.products()
    for ins in slp.instructions:
        if not isinstance(ins, Mul) and kinds[ins.dst] is not Kind.M:
            run(ins)
    lefts = [values[ins.srcA] for ins in products]
    rights = [values[ins.srcB] for ins in products]
    values = {}
    if mul_many is not None:
        results = mul_many(lefts, rights)
    else:
        mul = mul or ring.matmul
        results = [mul(x, y) for x, y in zip(lefts, rights)]
    del lefts, rights
    for ins, prod in zip(products, results):
        values[ins.dst] = prod
    for ins in slp.instructions:
        if not isinstance(ins, Mul) and kinds[ins.dst] is Kind.M:
            run(ins)
    blocks = [values[src] for src in slp.outputs]
    C = np.concatenate(
        [np.concatenate(blocks[p * i : p * (i + 1)], axis=-1) for i in range(n)], axis=-2
    )
    return unpad(C, rows, cols)


def _square_base(slp: StraightLineProgram) -> int:
    n, m, p = slp.dims
    if not n == m == p:
        raise ShapeError(f"recursive multiplication needs a square scheme, got {slp.dims}")
    return n


def padded_size(size: int, base: int, threshold: int) -> int:
    """Size after padding to ``base**k`` when recursion is needed."""
    if size <= threshold or base == 1:
        return size
    full = 1
    while full < size:
        full *= base
    return full


def recursive_multiply(
    A: np.ndarray,
    B: np.ndarray,
    slp: StraightLineProgram,
    threshold: int = 27,
    ring: Optional[ScalarRing] = None,
    meter: Optional[OpMeter] = None,
) -> np.ndarray:
    """Multiply square matrices by applying ``slp`` recursively.

    Sizes at or below ``threshold`` use schoolbook multiplication; larger
    inputs are zero-padded to the next power of the scheme's base dimension.
    """
    ring = ring or RationalRing()
    base = _square_base(slp)
    A = np.asarray(A)
    B = np.asarray(B)
    size = A.shape[-1]
    if A.shape[-2:] != (size, size) or B.shape[-2:] != (size, size):
        raise ShapeError(f"recursive multiplication needs equal square inputs, got {A.shape}, {B.shape}")
    if threshold < 1:
        raise ParameterError("threshold must be at least 1")
    if base == 1 and size > threshold:
        raise ShapeError("a 1x1x1 program cannot split larger matrices")
    start = time.perf_counter()
    metered = MeteredRing(ring, meter, _batch_size(A, B)) if meter is not None else ring
    full = padded_size(size, base, threshold)
    A = pad(A, full, full, ring)
    B = pad(B, full, full, ring)

    def rec(x, y):
        if x.shape[-1] <= threshold:
            return metered.matmul(x, y)
        return eval_slp(slp, x, y, metered, mul_many=rec_many)

    # all products of one level recurse together, stacked on a new axis
    def rec_many(lefts, rights):
        return list(rec(np.stack(np.broadcast_arrays(*lefts)), np.stack(np.broadcast_arrays(*rights))))

    C = unpad(rec(A, B), size, size)
    if meter is not None:
        meter.wall_time += time.perf_counter() - start
    return C


def count_formula(slp_adds: int, rank: int, base: int, levels: int) -> tuple[int, int]:
    """Closed-form scalar (muls, adds) of ``levels`` recursion levels.

    Solves ``adds(k) = rank*adds(k-1) + slp_adds*(base**2)**(k-1)``,
    ``adds(0) = 0``.
    """
    if levels < 0:
        raise ParameterError("levels must be non-negative")
    sq = base * base
    muls = rank**levels
    if rank == sq:
        adds = slp_adds * levels * sq ** (levels - 1) if levels else 0
        raise DegenerateRecursionError(muls, adds)
    return muls, slp_adds * (rank**levels - sq**levels) // (rank - sq)


def expected_counts(slp: StraightLineProgram, size: int, threshold: int = 1) -> tuple[int, int]:
    """(muls, adds) that recursive_multiply performs at ``size``."""
    base = _square_base(slp)
    q = slp_addition_count(slp).adds_total
    R = slp.rank
    n = padded_size(size, base, threshold)

    def rec(s):
        if s <= threshold:
            return s**3, s * s * (s - 1)
        sub = s // base
        muls, adds = rec(sub)
        return R * muls, R * adds + q * sub * sub

    return rec(n)


# --------------------------------------------------------------------------
# Benchmarking


@dataclass(frozen=True)
class BenchRow:
    size: int
    padded: int
    adds: int
    muls: int
    scales: int
    time_ns: int
    baseline_ns: int
    expected_adds: int
    expected_muls: int
    correct: bool

    @property
    def counts_match(self) -> bool:
        return (self.adds, self.muls) == (self.expected_adds, self.expected_muls)


def bench(
    slp: StraightLineProgram,
    sizes: Sequence[int],
    ring: Optional[ScalarRing] = None,
    repetitions: int = 3,
    seed: int = 0,
    threshold: int = 1,
) -> list[BenchRow]:
    """Time recursive multiplication against schoolbook multiplication.

    Inputs are drawn from ``seed``; times are medians over ``repetitions``.
    """
    ring = ring or CheckedInt64Ring()
    if repetitions < 1:
        raise ParameterError("repetitions must be at least 1")
    rng = np.random.default_rng(seed)
    rows = []
    for size in sizes:
        if size < 1:
            raise ParameterError("sizes must be positive")
        A = ring.random(rng, (size, size))
        B = ring.random(rng, (size, size))
        times, base_times = [], []
        meter = OpMeter()
        for rep in range(repetitions):
            m = OpMeter()
            t0 = time.perf_counter_ns()
            C = recursive_multiply(A, B, slp, threshold, ring, m)
            times.append(time.perf_counter_ns() - t0)
            t0 = time.perf_counter_ns()
            ref = ring.matmul(A, B)
            base_times.append(time.perf_counter_ns() - t0)
            if rep == 0:
                meter = m
        exp_muls, exp_adds = expected_counts(slp, size, threshold)
        rows.append(
            BenchRow(
                size=size,
                padded=padded_size(size, _square_base(slp), threshold),
                adds=meter.scalar_adds,
                muls=meter.scalar_muls,
                scales=meter.scalar_scales,
                time_ns=int(statistics.median(times)),
                baseline_ns=int(statistics.median(base_times)),
                expected_adds=exp_adds,
                expected_muls=exp_muls,
                correct=ring.equal(C, ref),
            )
        )
    return rows


def format_bench(rows: Sequence[BenchRow], delimiter: str = ",") -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerow(["size", "adds", "muls", "time_ns", "baseline_ns"])
    for row in rows:
        writer.writerow([row.size, row.adds, row.muls, row.time_ns, row.baseline_ns])
    return buf.getvalue()

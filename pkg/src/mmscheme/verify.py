"""Exact and randomized checks that a scheme or program multiplies matrices."""

from __future__ import annotations

import enum
import random
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ExtractionError, InvalidSchemeError, KindError, MalformedProgramError, ParameterError
from .model import (
    BilinearScheme,
    Kind,
    Lin,
    Scale,
    StraightLineProgram,
    matmul_tensor,
)


class Verdict(enum.Enum):
    VALID = "Valid"
    INVALID = "Invalid"


@dataclass(frozen=True)
class Failure:
    a: int
    b: int
    c: int
    computed: Fraction
    expected: int


@dataclass(frozen=True)
class VerificationReport:
    verdict: Verdict
    failures: tuple[Failure, ...] = field(default=())
    equations_checked: int = 0

    @property
    def valid(self) -> bool:
        return self.verdict is Verdict.VALID

    def summary(self) -> str:
        if self.valid:
            return f"Valid ({self.equations_checked}/{self.equations_checked} equations)"
        ok = self.equations_checked - len(self.failures)
        return f"Invalid ({ok}/{self.equations_checked} equations, {len(self.failures)} failing)"


def _report(dims, computed: dict) -> VerificationReport:
    tensor = matmul_tensor(dims)
    na, nb, nc = tensor.shape
    failures = []
    for key in sorted(set(computed) | tensor.ones):
        value = computed.get(key, Fraction(0))
        expected = 1 if key in tensor.ones else 0
        if value != expected:
            failures.append(Failure(*key, value, expected))
    verdict = Verdict.INVALID if failures else Verdict.VALID
    return VerificationReport(verdict, tuple(failures), na * nb * nc)


def verify_coefficients(dims: Sequence[int], U, V, W) -> VerificationReport:
    """Check the Brent equations for raw coefficient matrices.

    Unlike :func:`verify_scheme` this accepts matrices with all-zero columns,
    which single-entry mutations can produce.
    """
    n, m, p = dims
    rank = len(U[0])
    sums: dict = defaultdict(Fraction)
    for r in range(rank):
        col_u = [(a, Fraction(row[r])) for a, row in enumerate(U) if row[r] != 0]
        col_v = [(b, Fraction(row[r])) for b, row in enumerate(V) if row[r] != 0]
        col_w = [(c, Fraction(row[r])) for c, row in enumerate(W) if row[r] != 0]
        for a, x in col_u:
            for b, y in col_v:
                xy = x * y
                for c, z in col_w:
                    sums[(a, b, c)] += xy * z
    return _report((n, m, p), {k: v for k, v in sums.items() if v != 0})


def verify_scheme(scheme: BilinearScheme) -> VerificationReport:
    """Exhaustively check sum_r U[a][r] V[b][r] W[c][r] == T[a][b][c]."""
    return verify_coefficients(scheme.dims, scheme.U, scheme.V, scheme.W)


def _unit(size: int, index: int) -> np.ndarray:
    vec = np.array([Fraction(0)] * size, dtype=object)
    vec[index] = Fraction(1)
    return vec


def _symbolic_values(slp: StraightLineProgram, bilinear: bool) -> dict:
    """Evaluate ``slp`` symbolically.

    Linear values are coefficient vectors over A (or B) entries.  Products are
    either (n*m) x (m*p) coefficient matrices (``bilinear``) or indicator
    vectors over the product index.
    """
    n, m, p = slp.dims
    values: dict = {}
    for a in range(n * m):
        values[f"A{a}"] = _unit(n * m, a)
    for b in range(m * p):
        values[f"B{b}"] = _unit(m * p, b)
    rank = slp.rank
    r = 0
    for ins in slp.instructions:
        if isinstance(ins, Lin):
            values[ins.dst] = ins.c1 * values[ins.src1] + ins.c2 * values[ins.src2]
        elif isinstance(ins, Scale):
            values[ins.dst] = ins.c * values[ins.src]
        else:
            if bilinear:
                values[ins.dst] = np.outer(values[ins.srcA], values[ins.srcB])
            else:
                values[ins.dst] = _unit(rank, r)
            r += 1
    return values


def verify_slp(slp: StraightLineProgram) -> VerificationReport:
    try:
        slp.check_kinds()
    except KindError as exc:
        raise MalformedProgramError(str(exc)) from exc
    values = _symbolic_values(slp, bilinear=True)
    computed = {}
    for c, src in enumerate(slp.outputs):
        mat = values[src]
        for a, b in zip(*np.nonzero(mat != 0)):
            computed[(int(a), int(b), c)] = mat[a, b]
    return _report(slp.dims, computed)


def extract_scheme(slp: StraightLineProgram, name: str = "") -> BilinearScheme:
    """Read the scheme a program computes off its products and outputs."""
    kinds = slp.kinds()
    for ins in slp.products():
        if (kinds[ins.srcA], kinds[ins.srcB]) != (Kind.A, Kind.B):
            raise ExtractionError(
                f"{ins.dst} multiplies {kinds[ins.srcA].value} by {kinds[ins.srcB].value}; "
                "not a bilinear product"
            )
    try:
        slp.check_kinds()
    except KindError as exc:
        raise MalformedProgramError(str(exc)) from exc
    values = _symbolic_values(slp, bilinear=False)
    products = slp.products()
    U = np.array([values[ins.srcA] for ins in products], dtype=object).T
    V = np.array([values[ins.srcB] for ins in products], dtype=object).T
    W = np.array([values[src] for src in slp.outputs], dtype=object)
    try:
        return BilinearScheme(slp.dims, U.tolist(), V.tolist(), W.tolist(), name=name)
    except InvalidSchemeError as exc:
        raise ExtractionError(str(exc)) from exc


# --------------------------------------------------------------------------
# Randomized checking over a prime field


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact below 3.3e24."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for q in small:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for base in small:
        x = pow(base, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class RandomCheckResult:
    passed: bool
    trials: int
    witness: Optional[tuple] = None

    def __bool__(self) -> bool:
        return self.passed


def _mod(c: Fraction, p: int) -> int:
    if c.denominator % p == 0:
        raise ParameterError(f"coefficient {c} is undefined modulo {p}")
    return c.numerator * pow(c.denominator, -1, p) % p


def _naive_mod(A, B, dims, p):
    n, m, q = dims
    return [
        sum(A[m * i + j] * B[q * j + t] for j in range(m)) % p
        for i in range(n)
        for t in range(q)
    ]


def _eval_scheme_mod(scheme: BilinearScheme, A, B, p):
    prods = []
    for r in range(scheme.rank):
        left = sum(_mod(row[r], p) * A[a] for a, row in enumerate(scheme.U) if row[r]) % p
        right = sum(_mod(row[r], p) * B[b] for b, row in enumerate(scheme.V) if row[r]) % p
        prods.append(left * right % p)
    return [sum(_mod(x, p) * prods[r] for r, x in enumerate(row) if x) % p for row in scheme.W]


def _eval_slp_mod(slp: StraightLineProgram, A, B, p):
    values = {f"A{a}": x for a, x in enumerate(A)}
    values.update({f"B{b}": x for b, x in enumerate(B)})
    for ins in slp.instructions:
        if isinstance(ins, Lin):
            values[ins.dst] = (_mod(ins.c1, p) * values[ins.src1] + _mod(ins.c2, p) * values[ins.src2]) % p
        elif isinstance(ins, Scale):
            values[ins.dst] = _mod(ins.c, p) * values[ins.src] % p
        else:
            values[ins.dst] = values[ins.srcA] * values[ins.srcB] % p
    return [values[src] for src in slp.outputs]


def check_pair(obj: Union[BilinearScheme, StraightLineProgram], A, B, modulus: int) -> bool:
    """Compare one evaluation against naive multiplication modulo ``modulus``.

    ``A`` and ``B`` are flat lists in compact index order.
    """
    A = [x % modulus for x in A]
    B = [x % modulus for x in B]
    if isinstance(obj, BilinearScheme):
        got = _eval_scheme_mod(obj, A, B, modulus)
    else:
        got = _eval_slp_mod(obj, A, B, modulus)
    return got == _naive_mod(A, B, obj.dims, modulus)


def random_check(
    obj: Union[BilinearScheme, StraightLineProgram],
    modulus: int = 1_000_003,
    trials: int = 100,
    seed: int = 0,
) -> RandomCheckResult:
    """Schwartz-Zippel style check with uniformly random inputs mod a prime.

    A wrong scheme survives one trial with probability at most 2/p, since
    every output is a polynomial of degree 2 in the inputs.
    """
    if modulus <= 2 or not is_prime(modulus):
        raise ParameterError(f"modulus must be an odd prime, got {modulus}")
    if trials < 1:
        raise ParameterError("trials must be at least 1")
    n, m, p = obj.dims
    rng = random.Random(seed)
    for t in range(trials):
        A = [rng.randrange(modulus) for _ in range(n * m)]
        B = [rng.randrange(modulus) for _ in range(m * p)]
        if not check_pair(obj, A, B, modulus):
            return RandomCheckResult(False, t + 1, (A, B))
    return RandomCheckResult(True, trials)

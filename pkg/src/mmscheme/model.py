"""Data model: bilinear schemes, the matrix multiplication tensor, straight-line
programs and addition counting.

Matrix entries use compact row-major indices.  For an ``n x m`` matrix ``A``
times an ``m x p`` matrix ``B``::

    A[i][j] -> A_{m*i + j}     B[k][l] -> B_{p*k + l}     C[s][t] -> C_{p*s + t}

A scheme of rank ``R`` computes

    M_r = (sum_a U[a][r] A_a) * (sum_b V[b][r] B_b)
    C_c = sum_r W[c][r] M_r
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .errors import InvalidSchemeError, KindError, SemanticError, SSAError, SlpError

# Exact rational scalar.  Fraction is always kept in lowest terms with a
# positive denominator, and zero is uniquely 0/1.
Coefficient = Fraction

Dims = tuple[int, int, int]
Matrix = tuple[tuple[Fraction, ...], ...]
Terms = list[tuple[Fraction, str]]

ONE = Fraction(1)


def coefficient(value: Union[int, str, Fraction]) -> Fraction:
    """Coerce ints, ``"p/q"`` strings and Fractions to a Coefficient."""
    if isinstance(value, float):
        raise TypeError("floats are not exact coefficients")
    return Fraction(value)


def _check_dims(dims: Sequence[int]) -> Dims:
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or min(dims) < 1:
        raise InvalidSchemeError(f"dims must be three positive integers, got {dims}")
    return dims  # type: ignore[return-value]


def _freeze(rows: Iterable[Iterable]) -> Matrix:
    return tuple(tuple(coefficient(x) for x in row) for row in rows)


@dataclass(frozen=True)
class BilinearScheme:
    dims: Dims
    U: Matrix
    V: Matrix
    W: Matrix
    name: str = field(default="", compare=False)

    def __post_init__(self):
        dims = _check_dims(self.dims)
        object.__setattr__(self, "dims", dims)
        n, m, p = dims
        U, V, W = _freeze(self.U), _freeze(self.V), _freeze(self.W)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "W", W)
        for label, mat, rows in (("U", U, n * m), ("V", V, m * p), ("W", W, n * p)):
            if len(mat) != rows:
                raise InvalidSchemeError(f"{label} has {len(mat)} rows, expected {rows}")
        rank = len(U[0])
        if rank < 1:
            raise InvalidSchemeError("rank must be positive")
        for label, mat in (("U", U), ("V", V), ("W", W)):
            for i, row in enumerate(mat):
                if len(row) != rank:
                    raise InvalidSchemeError(
                        f"{label} row {i} has {len(row)} columns, expected {rank}"
                    )
            for r in range(rank):
                if all(row[r] == 0 for row in mat):
                    raise InvalidSchemeError(f"{label} column {r} is all zero")

    @property
    def rank(self) -> int:
        return len(self.U[0])

    def a_forms(self) -> list[dict[int, Fraction]]:
        """Left operand of each product as ``{A index: coefficient}``."""
        return _columns(self.U, self.rank)

    def b_forms(self) -> list[dict[int, Fraction]]:
        return _columns(self.V, self.rank)

    def c_forms(self) -> list[dict[int, Fraction]]:
        """Each output as ``{product index: coefficient}``."""
        return [{r: x for r, x in enumerate(row) if x != 0} for row in self.W]

    def is_integral(self) -> bool:
        return all(x.denominator == 1 for mat in (self.U, self.V, self.W) for row in mat for x in row)


def _columns(mat: Matrix, rank: int) -> list[dict[int, Fraction]]:
    return [{a: row[r] for a, row in enumerate(mat) if row[r] != 0} for r in range(rank)]


@dataclass(frozen=True)
class MatMulTensor:
    """The 0/1 tensor T[a][b][c] of the ``<n,m,p>`` matrix product."""

    dims: Dims
    ones: frozenset

    @property
    def shape(self) -> tuple[int, int, int]:
        n, m, p = self.dims
        return (n * m, m * p, n * p)

    def __getitem__(self, abc: tuple[int, int, int]) -> int:
        return 1 if tuple(abc) in self.ones else 0

    def nnz(self) -> int:
        return len(self.ones)


def matmul_tensor(dims: Sequence[int]) -> MatMulTensor:
    n, m, p = _check_dims(dims)
    ones = frozenset(
        (m * i + j, p * j + t, p * i + t)
        for i in range(n)
        for j in range(m)
        for t in range(p)
    )
    return MatMulTensor((n, m, p), ones)


def standard_scheme(dims: Sequence[int]) -> BilinearScheme:
    """The schoolbook scheme: one product A[i][j]*B[j][t] per (i, j, t)."""
    n, m, p = _check_dims(dims)
    rank = n * m * p
    U = [[0] * rank for _ in range(n * m)]
    V = [[0] * rank for _ in range(m * p)]
    W = [[0] * rank for _ in range(n * p)]
    r = 0
    for i in range(n):
        for j in range(m):
            for t in range(p):
                U[m * i + j][r] = V[p * j + t][r] = W[p * i + t][r] = 1
                r += 1
    return BilinearScheme((n, m, p), U, V, W, name=f"standard-{n}x{m}x{p}")


# --------------------------------------------------------------------------
# Straight-line programs


class Kind(enum.Enum):
    A = "A-linear"
    B = "B-linear"
    M = "M-bilinear"


@dataclass(frozen=True)
class Lin:
    """``dst := c1*src1 + c2*src2``"""

    dst: str
    c1: Fraction
    src1: str
    c2: Fraction
    src2: str

    def __post_init__(self):
        object.__setattr__(self, "c1", coefficient(self.c1))
        object.__setattr__(self, "c2", coefficient(self.c2))
        if self.c1 == 0 or self.c2 == 0:
            raise SlpError(f"{self.dst}: Lin coefficients must be nonzero")

    @property
    def sources(self) -> tuple[str, ...]:
        return (self.src1, self.src2)


@dataclass(frozen=True)
class Scale:
    """``dst := c*src``"""

    dst: str
    c: Fraction
    src: str

    def __post_init__(self):
        object.__setattr__(self, "c", coefficient(self.c))
        if self.c in (0, 1):
            raise SlpError(f"{self.dst}: Scale coefficient must not be 0 or 1")

    @property
    def sources(self) -> tuple[str, ...]:
        return (self.src,)


@dataclass(frozen=True)
class Mul:
    """``dst := srcA * srcB``"""

    dst: str
    srcA: str
    srcB: str

    @property
    def sources(self) -> tuple[str, ...]:
        return (self.srcA, self.srcB)


Instruction = Union[Lin, Scale, Mul]

NAME_RE = re.compile(r"^(?:[ABtuvMC]\d+|_\d+)$")


def input_names(dims: Sequence[int]) -> list[str]:
    n, m, p = dims
    return [f"A{a}" for a in range(n * m)] + [f"B{b}" for b in range(m * p)]


def is_anonymous(name: str) -> bool:
    return name.startswith("_")


@dataclass(frozen=True)
class StraightLineProgram:
    """SSA program over matrix entries.

    ``outputs[c]`` names the source holding ``C_c``.  Construction checks SSA
    form and definition-before-use; operand kinds are checked separately by
    :meth:`check_kinds` so that malformed programs can still be built and
    reported on.
    """

    dims: Dims
    instructions: tuple[Instruction, ...]
    outputs: tuple[str, ...]

    def __post_init__(self):
        dims = _check_dims(self.dims)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "instructions", tuple(self.instructions))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        n, m, p = dims
        defined = set(input_names(dims))
        for ins in self.instructions:
            if not NAME_RE.match(ins.dst):
                raise SlpError(f"invalid destination name {ins.dst!r}")
            for src in ins.sources:
                if src not in defined:
                    raise SemanticError(f"{ins.dst}: source {src} used before definition")
            if ins.dst in defined:
                raise SSAError(f"{ins.dst} assigned more than once")
            defined.add(ins.dst)
        if len(self.outputs) != n * p:
            raise SlpError(f"expected {n * p} outputs, got {len(self.outputs)}")
        for c, src in enumerate(self.outputs):
            if src not in defined:
                raise SemanticError(f"output C{c} refers to undefined source {src}")

    @property
    def rank(self) -> int:
        return sum(isinstance(ins, Mul) for ins in self.instructions)

    def products(self) -> list[Mul]:
        return [ins for ins in self.instructions if isinstance(ins, Mul)]

    def definitions(self) -> dict[str, Instruction]:
        return {ins.dst: ins for ins in self.instructions}

    def kinds(self) -> dict[str, Kind]:
        """Kind of every source, inferred without checking operand agreement."""
        n, m, p = self.dims
        kinds = {f"A{a}": Kind.A for a in range(n * m)}
        kinds.update({f"B{b}": Kind.B for b in range(m * p)})
        for ins in self.instructions:
            if isinstance(ins, Mul):
                kinds[ins.dst] = Kind.M
            else:
                kinds[ins.dst] = kinds[ins.sources[0]]
        return kinds

    def check_kinds(self) -> dict[str, Kind]:
        """Single pass over the program enforcing the kind rules."""
        n, m, p = self.dims
        kinds = {f"A{a}": Kind.A for a in range(n * m)}
        kinds.update({f"B{b}": Kind.B for b in range(m * p)})
        for ins in self.instructions:
            if isinstance(ins, Mul):
                got = (kinds[ins.srcA], kinds[ins.srcB])
                if got != (Kind.A, Kind.B):
                    raise KindError(
                        f"{ins.dst}: product needs (A-linear, B-linear) operands, "
                        f"got ({got[0].value}, {got[1].value})"
                    )
                kinds[ins.dst] = Kind.M
            elif isinstance(ins, Lin):
                k1, k2 = kinds[ins.src1], kinds[ins.src2]
                if k1 != k2:
                    raise KindError(f"{ins.dst}: mixes {k1.value} and {k2.value}")
                kinds[ins.dst] = k1
            else:
                kinds[ins.dst] = kinds[ins.src]
        for c, src in enumerate(self.outputs):
            if kinds[src] != Kind.M:
                raise KindError(f"output C{c} is {kinds[src].value}, not M-bilinear")
        return kinds


# --------------------------------------------------------------------------
# Counting


@dataclass(frozen=True)
class OpCountReport:
    adds_A: int
    adds_B: int
    adds_C: int
    muls: int
    scales: int = 0

    @property
    def adds_total(self) -> int:
        return self.adds_A + self.adds_B + self.adds_C


def lead_positive(terms: Sequence[tuple[Fraction, str]]) -> list[tuple[Fraction, str]]:
    """Rotate ``terms`` so the first positive one leads.

    All-negative combinations are returned unchanged.
    """
    for i, (c, _) in enumerate(terms):
        if c > 0:
            return list(terms[i:]) + list(terms[:i])
    return list(terms)


def _form_scales(coeffs: Sequence[Fraction]) -> int:
    if len(coeffs) == 1:
        return 0 if coeffs[0] == 1 else 1
    extra = 1 if all(c < 0 for c in coeffs) else 0
    return sum(abs(c) != 1 for c in coeffs) + extra


def lin_scales(ins: Instruction) -> int:
    """Scalar multiplications needed to execute one instruction.

    A Lin with a coefficient of +1 on one side is an addition or subtraction
    of the other term; both coefficients equal to -1 costs a negation.
    """
    if isinstance(ins, Scale):
        return 1
    if isinstance(ins, Lin):
        extra = 1 if ins.c1 < 0 and ins.c2 < 0 else 0
        return (abs(ins.c1) != 1) + (abs(ins.c2) != 1) + extra
    return 0


def naive_addition_count(scheme: BilinearScheme) -> OpCountReport:
    """Additions needed when every linear form is summed term by term."""
    families = (scheme.a_forms(), scheme.b_forms(), scheme.c_forms())
    adds = [sum(len(f) - 1 for f in forms if f) for forms in families]
    scales = sum(
        _form_scales([c for _, c in sorted(f.items())]) for forms in families for f in forms if f
    )
    return OpCountReport(adds[0], adds[1], adds[2], muls=scheme.rank, scales=scales)


def slp_addition_count(slp: StraightLineProgram) -> OpCountReport:
    """One addition per Lin, attributed to the side of its destination."""
    kinds = slp.kinds()
    adds = {Kind.A: 0, Kind.B: 0, Kind.M: 0}
    muls = scales = 0
    for ins in slp.instructions:
        if isinstance(ins, Lin):
            adds[kinds[ins.dst]] += 1
        elif isinstance(ins, Mul):
            muls += 1
        scales += lin_scales(ins)
    return OpCountReport(adds[Kind.A], adds[Kind.B], adds[Kind.M], muls=muls, scales=scales)


class Namer:
    """Sequential anonymous names ``_0, _1, ...`` for chain intermediates."""

    def __init__(self, start: int = 0):
        self.next = start

    def __call__(self) -> str:
        name = f"_{self.next}"
        self.next += 1
        return name


def compile_chain(terms: Sequence[tuple[Fraction, str]], dst: str, namer: Namer) -> list[Instruction]:
    """Fold a linear combination left to right into Lin instructions.

    The final instruction writes ``dst``; intermediates get anonymous names.
    A single term with coefficient 1 needs no instruction and yields ``[]``.
    """
    terms = list(terms)
    if not terms:
        raise SlpError(f"{dst}: empty linear combination")
    if len(terms) == 1:
        c, src = terms[0]
        return [] if c == 1 else [Scale(dst, c, src)]
    out: list[Instruction] = []
    (c1, s1), (c2, s2) = terms[0], terms[1]
    acc_name = dst if len(terms) == 2 else namer()
    out.append(Lin(acc_name, c1, s1, c2, s2))
    for k, (c, s) in enumerate(terms[2:], start=3):
        name = dst if k == len(terms) else namer()
        out.append(Lin(name, ONE, acc_name, c, s))
        acc_name = name
    return out


def operand(terms: Sequence[tuple[Fraction, str]], namer: Namer) -> tuple[str, list[Instruction]]:
    """Materialise a product operand, reusing a bare source when possible."""
    if len(terms) == 1 and terms[0][0] == 1:
        return terms[0][1], []
    dst = namer()
    return dst, compile_chain(terms, dst, namer)


def scheme_to_naive_slp(scheme: BilinearScheme) -> StraightLineProgram:
    """Realise a scheme literally: every form summed term by term.

    Terms are taken in index order, rotated so a positive term leads.
    """
    namer = Namer()
    instructions: list[Instruction] = []
    for r, (fa, fb) in enumerate(zip(scheme.a_forms(), scheme.b_forms())):
        a_terms = lead_positive([(c, f"A{a}") for a, c in sorted(fa.items())])
        b_terms = lead_positive([(c, f"B{b}") for b, c in sorted(fb.items())])
        sa, ia = operand(a_terms, namer)
        sb, ib = operand(b_terms, namer)
        instructions += ia + ib + [Mul(f"M{r}", sa, sb)]
    outputs = []
    for c, fc in enumerate(scheme.c_forms()):
        terms = lead_positive([(x, f"M{r}") for r, x in sorted(fc.items())])
        if not terms:
            raise InvalidSchemeError(f"output C{c} uses no products")
        chain = compile_chain(terms, f"C{c}", namer)
        instructions += chain
        outputs.append(f"C{c}" if chain else terms[0][1])
    return StraightLineProgram(scheme.dims, tuple(instructions), tuple(outputs))

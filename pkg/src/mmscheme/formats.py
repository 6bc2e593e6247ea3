"""Readers and writers for coefficient files and straight-line program text.

Coefficient files hold three blocks of whitespace-separated integers, one row
per matrix entry and one column per product, separated by lines starting
with ``#``::

    0 1 0 ...      <- U, row a = A_a
    ...
    #
    ...            <- V, row b = B_b
    #
    ...            <- W, row c = C_c

Program text has one assignment per line, in execution order::

    t0 = A3 + A6
    M2 = (A8 + t6) * B8
    C8 = v5 - M7

Terms may carry an integer or ``p/q`` coefficient (``2 A3``, ``- 1/2 B1``).
Lines whose first non-blank character is ``#`` are comments; ``# dims: n,m,p``
fixes the dimensions.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Optional, Sequence, Union

from .errors import (
    DimensionError,
    FormatError,
    RankMismatchError,
    SemanticError,
    SerializationError,
    SlpError,
    SlpSyntaxError,
    SSAError,
    TokenError,
)
from .model import (
    BilinearScheme,
    Instruction,
    Lin,
    Mul,
    Namer,
    Scale,
    StraightLineProgram,
    compile_chain,
    is_anonymous,
    lead_positive,
    operand,
)

# --------------------------------------------------------------------------
# Coefficient files


@dataclass(frozen=True)
class SchemeFileDocument:
    blocks: tuple[tuple[tuple[int, ...], ...], ...]
    separators: tuple[int, ...]
    source: str


def parse_scheme_document(text: str) -> SchemeFileDocument:
    blocks: list[list[tuple[int, ...]]] = [[]]
    separators = []
    widths: list[Optional[int]] = [None]
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            separators.append(lineno)
            blocks.append([])
            widths.append(None)
            continue
        row = []
        for col, token in enumerate(stripped.split(), start=1):
            try:
                row.append(int(token))
            except ValueError:
                raise TokenError(token, lineno, col) from None
        if widths[-1] is None:
            widths[-1] = len(row)
        elif len(row) != widths[-1]:
            raise FormatError(
                f"ragged row at line {lineno}: {len(row)} entries, expected {widths[-1]}"
            )
        blocks[-1].append(tuple(row))
    # a trailing separator does not open a fourth block
    if len(blocks) > 1 and not blocks[-1]:
        blocks.pop()
    if len(blocks) != 3 or any(not b for b in blocks):
        raise FormatError(f"expected 3 blocks separated by '#' lines, found {len(blocks)}")
    ranks = {len(b[0]) for b in blocks}
    if len(ranks) != 1:
        raise RankMismatchError(
            f"blocks have different column counts: {[len(b[0]) for b in blocks]}"
        )
    return SchemeFileDocument(
        tuple(tuple(b) for b in blocks), tuple(separators), text
    )


def infer_dims(rows_u: int, rows_v: int, rows_w: int) -> tuple[int, int, int]:
    """Solve ``n*m, m*p, n*p`` = the three row counts for ``(n, m, p)``."""
    def exact_sqrt(num: int, den: int) -> Optional[int]:
        if num % den:
            return None
        q = num // den
        r = isqrt(q)
        return r if r * r == q else None

    n = exact_sqrt(rows_u * rows_w, rows_v)
    m = exact_sqrt(rows_u * rows_v, rows_w)
    p = exact_sqrt(rows_v * rows_w, rows_u)
    if not n or not m or not p or (n * m, m * p, n * p) != (rows_u, rows_v, rows_w):
        raise DimensionError(
            f"cannot infer dims from row counts {rows_u}/{rows_v}/{rows_w}; pass dims explicitly"
        )
    return (n, m, p)


def parse_scheme(text: str, dims: Optional[Sequence[int]] = None, name: str = "") -> BilinearScheme:
    doc = parse_scheme_document(text)
    rows = tuple(len(b) for b in doc.blocks)
    if dims is None:
        dims = infer_dims(*rows)
    else:
        dims = tuple(dims)
        n, m, p = dims
        if (n * m, m * p, n * p) != rows:
            raise DimensionError(f"dims {dims} need row counts {(n * m, m * p, n * p)}, file has {rows}")
    U, V, W = doc.blocks
    return BilinearScheme(dims, U, V, W, name=name)


def serialize_scheme(scheme: BilinearScheme) -> str:
    if not scheme.is_integral():
        raise SerializationError("coefficient files hold integers only")
    blocks = []
    for mat in (scheme.U, scheme.V, scheme.W):
        blocks.append("\n".join(" ".join(str(x.numerator) for x in row) for row in mat))
    return "\n#\n".join(blocks)


def normalize_whitespace(text: str) -> str:
    lines = (" ".join(line.split()) for line in text.splitlines())
    return "\n".join(line for line in lines if line)


# --------------------------------------------------------------------------
# Program text

Terms = list[tuple[Fraction, str]]


@dataclass(frozen=True)
class LinLine:
    name: str
    terms: tuple[tuple[Fraction, str], ...]


@dataclass(frozen=True)
class MulLine:
    name: str
    left: tuple[tuple[Fraction, str], ...]
    right: tuple[tuple[Fraction, str], ...]


Line = Union[LinLine, MulLine]

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<name>[ABtuvMC])_?\{?(?P<idx>\d+)\}?|(?P<num>\d+)|(?P<op>[-+*/()=]))"
)
_DIMS_RE = re.compile(r"^#\s*dims\s*:?\s*(\d+)\s*[, x]\s*(\d+)\s*[, x]\s*(\d+)\s*$")


def _tokenize(line: str, lineno: int) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    line = line.rstrip()
    while pos < len(line):
        mt = _TOKEN_RE.match(line, pos)
        if not mt or mt.end() == pos:
            raise SlpSyntaxError(f"line {lineno}: unexpected text {line[pos:].strip()!r}")
        if mt.group("name"):
            tokens.append(("name", mt.group("name") + str(int(mt.group("idx")))))
        elif mt.group("num"):
            tokens.append(("num", mt.group("num")))
        else:
            tokens.append(("op", mt.group("op")))
        pos = mt.end()
    return tokens


class _SumParser:
    def __init__(self, tokens: list[tuple[str, str]], lineno: int):
        self.tokens = tokens
        self.pos = 0
        self.lineno = lineno

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def fail(self, what: str):
        raise SlpSyntaxError(f"line {self.lineno}: {what}")

    def sum(self) -> Terms:
        terms = []
        sign = 1
        kind, val = self.peek()
        if (kind, val) in (("op", "+"), ("op", "-")):
            self.take()
            sign = -1 if val == "-" else 1
        terms.append(self.term(sign))
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            sign = -1 if self.take()[1] == "-" else 1
            terms.append(self.term(sign))
        return terms

    def term(self, sign: int) -> tuple[Fraction, str]:
        coef = Fraction(1)
        kind, val = self.peek()
        if kind == "num":
            self.take()
            num = int(val)
            den = 1
            if self.peek() == ("op", "/"):
                self.take()
                kind, val = self.take()
                if kind != "num":
                    self.fail("expected denominator after '/'")
                den = int(val)
                if den == 0:
                    self.fail("zero denominator")
            coef = Fraction(num, den)
            if coef == 0:
                self.fail("zero coefficient")
        kind, val = self.take()
        if kind != "name":
            self.fail(f"expected a name, got {val!r}")
        return (sign * coef, val)

    def factor(self) -> Terms:
        if self.peek() == ("op", "("):
            self.take()
            terms = self.sum()
            if self.take() != ("op", ")"):
                self.fail("expected ')'")
            return terms
        kind, val = self.take()
        if kind != "name":
            self.fail(f"expected a name or '(', got {val!r}")
        return [(Fraction(1), val)]

    def done(self):
        if self.pos != len(self.tokens):
            self.fail(f"unexpected {self.tokens[self.pos][1]!r}")


def parse_lines(text: str) -> tuple[list[Line], Optional[tuple[int, int, int]]]:
    lines: list[Line] = []
    dims = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            md = _DIMS_RE.match(stripped)
            if md:
                dims = tuple(int(g) for g in md.groups())
            continue
        tokens = _tokenize(stripped, lineno)
        if len(tokens) < 3 or tokens[0][0] != "name" or tokens[1] != ("op", "="):
            raise SlpSyntaxError(f"line {lineno}: expected 'name = expression'")
        name = tokens[0][1]
        if name[0] in "AB":
            raise SlpSyntaxError(f"line {lineno}: cannot assign to input {name}")
        rhs = tokens[2:]
        depth = 0
        stars = []
        for i, (kind, val) in enumerate(rhs):
            if val == "(":
                depth += 1
            elif val == ")":
                depth -= 1
            elif val == "*" and depth == 0:
                stars.append(i)
        if len(stars) > 1:
            raise SlpSyntaxError(f"line {lineno}: a product has exactly two factors")
        if stars:
            if name[0] != "M":
                raise SlpSyntaxError(f"line {lineno}: only M names may hold products")
            left = _SumParser(rhs[: stars[0]], lineno)
            lt = left.factor()
            left.done()
            right = _SumParser(rhs[stars[0] + 1 :], lineno)
            rt = right.factor()
            right.done()
            lines.append(MulLine(name, tuple(lt), tuple(rt)))
        else:
            if name[0] == "M":
                raise SlpSyntaxError(f"line {lineno}: {name} must be a product")
            parser = _SumParser(rhs, lineno)
            terms = parser.sum()
            parser.done()
            lines.append(LinLine(name, tuple(terms)))
    return lines, dims


def _infer_slp_dims(lines: Sequence[Line]) -> tuple[int, int, int]:
    top = {"A": 0, "B": 0, "C": 0}
    for line in lines:
        names = [line.name]
        if isinstance(line, LinLine):
            names += [s for _, s in line.terms]
        else:
            names += [s for _, s in line.left + line.right]
        for s in names:
            if s[0] in top:
                top[s[0]] = max(top[s[0]], int(s[1:]) + 1)
    try:
        return infer_dims(top["A"], top["B"], top["C"])
    except DimensionError:
        raise DimensionError(
            "cannot infer program dims from the names used; add a '# dims: n,m,p' line"
        ) from None


def build_program(dims: Sequence[int], lines: Sequence[Line]) -> StraightLineProgram:
    """Compile assignment lines into instructions, folding each left to right."""
    n, m, p = dims
    namer = Namer()
    instructions: list[Instruction] = []
    outputs: dict[int, str] = {}
    for line in lines:
        if isinstance(line, MulLine):
            sa, ia = operand(line.left, namer)
            sb, ib = operand(line.right, namer)
            instructions += ia + ib + [Mul(line.name, sa, sb)]
            continue
        chain = compile_chain(line.terms, line.name, namer)
        if not chain:
            if line.name[0] != "C":
                raise SlpSyntaxError(f"{line.name}: plain copies are only allowed for outputs")
            src = line.terms[0][1]
        else:
            src = line.name
            instructions += chain
        if line.name[0] == "C":
            c = int(line.name[1:])
            if c >= n * p:
                raise SlpError(f"{line.name} is out of range for dims {tuple(dims)}")
            if c in outputs:
                raise SSAError(f"{line.name} assigned more than once")
            outputs[c] = src
    missing = [f"C{c}" for c in range(n * p) if c not in outputs]
    if missing:
        raise SemanticError(f"outputs never assigned: {', '.join(missing)}")
    return StraightLineProgram(tuple(dims), tuple(instructions), tuple(outputs[c] for c in range(n * p)))


def parse_slp(text: str, dims: Optional[Sequence[int]] = None) -> StraightLineProgram:
    lines, header_dims = parse_lines(text)
    if dims is None:
        dims = header_dims or _infer_slp_dims(lines)
    slp = build_program(dims, lines)
    slp.check_kinds()
    return slp


def _chain_terms(defs: dict[str, Instruction], name: str) -> Terms:
    ins = defs[name]
    if isinstance(ins, Scale):
        if is_anonymous(ins.src):
            raise SlpError(f"{name}: cannot render a scaled intermediate")
        return [(ins.c, ins.src)]
    if isinstance(ins, Mul):
        raise SlpError(f"{name}: anonymous product cannot be rendered")
    if is_anonymous(ins.src1) and ins.c1 == 1 and isinstance(defs[ins.src1], Lin):
        head = _chain_terms(defs, ins.src1)
    elif is_anonymous(ins.src1):
        raise SlpError(f"{name}: intermediate {ins.src1} cannot be rendered")
    else:
        head = [(ins.c1, ins.src1)]
    if is_anonymous(ins.src2):
        raise SlpError(f"{name}: intermediate {ins.src2} cannot be rendered")
    return head + [(ins.c2, ins.src2)]


def program_lines(slp: StraightLineProgram) -> list[Line]:
    """Recover one assignment line per named value, in program order.

    Anonymous intermediates are folded back into the line that consumes them;
    each must be used exactly once.
    """
    uses = Counter(s for ins in slp.instructions for s in ins.sources)
    uses.update(slp.outputs)
    for name, count in uses.items():
        if is_anonymous(name) and count != 1:
            raise SlpError(f"intermediate {name} is used {count} times; name it to render")
    defs = slp.definitions()

    def operand_terms(src: str) -> tuple:
        return tuple(_chain_terms(defs, src)) if is_anonymous(src) else ((Fraction(1), src),)

    aliases = {
        c: src for c, src in enumerate(slp.outputs) if src != f"C{c}"
    }
    for c, src in aliases.items():
        if is_anonymous(src):
            raise SlpError(f"output C{c} refers to intermediate {src}")
    pending = sorted(aliases)
    lines: list[Line] = []

    def flush(upto: int):
        while pending and pending[0] < upto:
            c = pending.pop(0)
            lines.append(LinLine(f"C{c}", ((Fraction(1), aliases[c]),)))

    for ins in slp.instructions:
        if is_anonymous(ins.dst):
            continue
        if ins.dst[0] == "C":
            flush(int(ins.dst[1:]))
        if isinstance(ins, Mul):
            lines.append(MulLine(ins.dst, operand_terms(ins.srcA), operand_terms(ins.srcB)))
        else:
            lines.append(LinLine(ins.dst, tuple(_chain_terms(defs, ins.dst))))
    flush(len(slp.outputs))
    return lines


def _coef_text(c: Fraction) -> str:
    mag = abs(c)
    return "" if mag == 1 else f"{mag} "


def render_terms(terms: Sequence[tuple[Fraction, str]]) -> str:
    terms = lead_positive(terms)
    c0, s0 = terms[0]
    parts = [("-" if c0 < 0 else "") + _coef_text(c0) + s0]
    for c, s in terms[1:]:
        parts.append(f"{'-' if c < 0 else '+'} {_coef_text(c)}{s}")
    return " ".join(parts)


def _render_factor(terms: Sequence[tuple[Fraction, str]]) -> str:
    if len(terms) == 1 and terms[0][0] == 1:
        return terms[0][1]
    return f"({render_terms(terms)})"


def negation_diagnostics(slp: StraightLineProgram) -> list[str]:
    """Lines whose combination has no positive term to lead with."""
    found = []
    for line in program_lines(slp):
        groups = [line.terms] if isinstance(line, LinLine) else [line.left, line.right]
        for terms in groups:
            if all(c < 0 for c, _ in terms):
                found.append(f"{line.name}: all terms negative, leading negation costs one extra operation")
                break
    return found


def emit_slp(slp: StraightLineProgram, diagnostics: Optional[list] = None) -> str:
    """Render a program as text, one line per named value.

    Every combination is rotated so that a positive term leads.  Lines where
    that is impossible are appended to ``diagnostics`` when given.
    """
    out = ["# dims: {},{},{}".format(*slp.dims)]
    for line in program_lines(slp):
        if isinstance(line, MulLine):
            out.append(f"{line.name} = {_render_factor(line.left)} * {_render_factor(line.right)}")
        else:
            out.append(f"{line.name} = {render_terms(line.terms)}")
    if diagnostics is not None:
        diagnostics.extend(negation_diagnostics(slp))
    return "\n".join(out) + "\n"


def rebalance_lines(lines: Sequence[Line]) -> list[Line]:
    out: list[Line] = []
    for line in lines:
        if isinstance(line, MulLine):
            out.append(MulLine(line.name, tuple(lead_positive(line.left)), tuple(lead_positive(line.right))))
        else:
            out.append(LinLine(line.name, tuple(lead_positive(line.terms))))
    return out

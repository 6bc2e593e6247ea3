"""Greedy pairwise common-subexpression elimination over linear forms.

Each family of linear forms (left operands, right operands, output
combinations) is reduced on its own.  One step counts, for every pair of
variables, how many forms contain that pair in the same ratio, and replaces
the most frequent pair by a new temporary.  A pair found in ``k`` forms saves
``k - 1`` additions, so the loop stops once no pair repeats.

This is a reconstruction in the spirit of a "vanilla" greedy reducer; it
makes no claim to reproduce any published tool step for step.
"""

from __future__ import annotations

import enum
import random
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import PreconditionError
from .formats import LinLine, MulLine, build_program, program_lines, rebalance_lines
from .model import (
    BilinearScheme,
    Instruction,
    Kind,
    Mul,
    Namer,
    StraightLineProgram,
    compile_chain,
    lead_positive,
    naive_addition_count,
    operand,
    slp_addition_count,
)
from .verify import verify_scheme

POLICY = "greedy-vanilla-like"


class TieBreak(enum.Enum):
    DETERMINISTIC = "deterministic"
    SEEDED_RANDOM = "seeded-random"


@dataclass(frozen=True)
class LinearFormSet:
    nvars: int
    forms: tuple
    kind: Kind

    def __post_init__(self):
        forms = []
        for form in self.forms:
            clean = {}
            for idx, c in dict(form).items():
                if not 0 <= idx < self.nvars:
                    raise ValueError(f"variable {idx} out of range [0, {self.nvars})")
                c = Fraction(c)
                if c == 0:
                    raise ValueError("linear forms store no zero coefficients")
                clean[idx] = c
            forms.append(clean)
        object.__setattr__(self, "forms", tuple(forms))

    def additions(self) -> int:
        return sum(max(len(f) - 1, 0) for f in self.forms)


@dataclass(frozen=True)
class TempDef:
    """``var := cx*x + cy*y``"""

    var: int
    cx: Fraction
    x: int
    cy: Fraction
    y: int


@dataclass(frozen=True)
class ReductionConfig:
    tie_break: TieBreak = TieBreak.DETERMINISTIC
    seed: int = 0
    restarts: int = 1
    policy: str = POLICY

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.tie_break is TieBreak.DETERMINISTIC and self.restarts != 1:
            raise ValueError("deterministic tie-breaking admits exactly one restart")
        if self.policy != POLICY:
            raise ValueError(f"unsupported policy {self.policy!r}")


@dataclass(frozen=True)
class ReductionReport:
    input_naive_additions: int
    output_additions: int
    temporaries: dict = field(default_factory=dict)
    seed_used: Optional[int] = None
    iterations: int = 0


def _pattern_counts(forms: Sequence[dict]) -> dict:
    counts: dict = defaultdict(int)
    for form in forms:
        items = sorted(form.items())
        for i, (x, cx) in enumerate(items):
            for y, cy in items[i + 1 :]:
                ratio = cy / cx
                counts[(x, y, ratio.denominator, ratio.numerator)] += 1
    return counts


def greedy_cse(
    forms: LinearFormSet, config: Optional[ReductionConfig] = None, rng: Optional[random.Random] = None
) -> tuple[list[TempDef], LinearFormSet]:
    """Pairwise greedy elimination; returns temporaries and rewritten forms.

    Pattern keys are ``(x, y, cx, cy)`` with ``x < y`` and the coefficient
    pair scaled to coprime integers with ``cx > 0``.  In deterministic mode
    the smallest key among the most frequent wins; otherwise ``rng`` (or one
    seeded from ``config.seed``) picks among them.
    """
    config = config or ReductionConfig()
    if config.tie_break is TieBreak.SEEDED_RANDOM and rng is None:
        rng = random.Random(config.seed)
    work = [dict(f) for f in forms.forms]
    temps: list[TempDef] = []
    nvars = forms.nvars
    while True:
        counts = _pattern_counts(work)
        best = max(counts.values(), default=0)
        if best < 2:
            break
        candidates = sorted(k for k, v in counts.items() if v == best)
        if config.tie_break is TieBreak.DETERMINISTIC:
            x, y, cx, cy = candidates[0]
        else:
            x, y, cx, cy = rng.choice(candidates)
        t = nvars
        nvars += 1
        cx, cy = Fraction(cx), Fraction(cy)
        temps.append(TempDef(t, cx, x, cy, y))
        for form in work:
            if x in form and y in form and form[y] / form[x] == cy / cx:
                scale = form[x] / cx
                del form[x], form[y]
                form[t] = scale
    return temps, LinearFormSet(nvars, tuple(work), forms.kind)


def scheme_form_sets(scheme: BilinearScheme) -> tuple[LinearFormSet, LinearFormSet, LinearFormSet]:
    n, m, p = scheme.dims
    return (
        LinearFormSet(n * m, tuple(scheme.a_forms()), Kind.A),
        LinearFormSet(m * p, tuple(scheme.b_forms()), Kind.B),
        LinearFormSet(scheme.rank, tuple(scheme.c_forms()), Kind.M),
    )


def _reduction_cost(temps: list, rewritten: LinearFormSet) -> int:
    return len(temps) + rewritten.additions()


def _assemble(scheme: BilinearScheme, results) -> StraightLineProgram:
    """Lay out temps-A, temps-B, products, temps-M, outputs."""
    n, m, p = scheme.dims
    sizes = (n * m, m * p, scheme.rank)
    prefixes = (("A", "t"), ("B", "u"), ("M", "v"))

    def namer_for(family: int):
        base, temp = prefixes[family]
        return lambda idx: f"{base}{idx}" if idx < sizes[family] else f"{temp}{idx - sizes[family]}"

    names = [namer_for(f) for f in range(3)]
    anon = Namer()
    instructions: list[Instruction] = []

    def temp_lines(family: int):
        temps, _ = results[family]
        name = names[family]
        for td in temps:
            terms = lead_positive([(td.cx, name(td.x)), (td.cy, name(td.y))])
            instructions.extend(compile_chain(terms, name(td.var), anon))

    def terms_of(family: int, form: dict):
        name = names[family]
        return lead_positive([(c, name(idx)) for idx, c in sorted(form.items())])

    temp_lines(0)
    temp_lines(1)
    a_forms, b_forms = results[0][1].forms, results[1][1].forms
    for r in range(scheme.rank):
        sa, ia = operand(terms_of(0, a_forms[r]), anon)
        sb, ib = operand(terms_of(1, b_forms[r]), anon)
        instructions.extend(ia + ib + [Mul(f"M{r}", sa, sb)])
    temp_lines(2)
    outputs = []
    for c, form in enumerate(results[2][1].forms):
        terms = terms_of(2, form)
        chain = compile_chain(terms, f"C{c}", anon)
        instructions.extend(chain)
        outputs.append(f"C{c}" if chain else terms[0][1])
    return StraightLineProgram(scheme.dims, tuple(instructions), tuple(outputs))


def _run_once(families, config: ReductionConfig, seed: int):
    rng = random.Random(seed) if config.tie_break is TieBreak.SEEDED_RANDOM else None
    results = []
    for fs in families:
        results.append(greedy_cse(fs, config, rng))
    return results


def reduce_scheme(
    scheme: BilinearScheme, config: Optional[ReductionConfig] = None
) -> tuple[StraightLineProgram, ReductionReport]:
    """Reduce additions and return a verified-by-construction program.

    With several restarts the seeds ``config.seed, config.seed + 1, ...`` are
    tried and the lowest count wins, ties going to the lowest seed.
    """
    config = config or ReductionConfig()
    if not verify_scheme(scheme).valid:
        raise PreconditionError("reduce_scheme needs a valid scheme")
    families = scheme_form_sets(scheme)
    best = None
    for k in range(config.restarts):
        seed = config.seed + k
        results = _run_once(families, config, seed)
        cost = sum(_reduction_cost(t, rw) for t, rw in results)
        if best is None or cost < best[0]:
            best = (cost, seed, results)
    cost, seed, results = best
    slp = orient_signs(_assemble(scheme, results))
    assert slp_addition_count(slp).adds_total == cost
    report = ReductionReport(
        input_naive_additions=naive_addition_count(scheme).adds_total,
        output_additions=cost,
        temporaries={side: len(t) for (t, _), side in zip(results, "ABC")},
        seed_used=seed if config.tie_break is TieBreak.SEEDED_RANDOM else None,
        iterations=sum(len(t) for t, _ in results),
    )
    return slp, report


def rebalance_negations(slp: StraightLineProgram) -> StraightLineProgram:
    """Reorder every combination so a positive term leads.

    Addition counts and semantics are unchanged.  Combinations without any
    positive term stay as they are; ``formats.negation_diagnostics`` lists
    them.
    """
    return build_program(slp.dims, rebalance_lines(program_lines(slp)))


def _negative_groups(lines) -> int:
    groups = 0
    for line in lines:
        parts = (line.terms,) if isinstance(line, LinLine) else (line.left, line.right)
        groups += sum(all(c < 0 for c, _ in terms) for terms in parts)
    return groups


def _flip(lines, index: int, side: str):
    """Negate one named value (or one factor of a product) and its uses."""
    target = lines[index]
    out = list(lines)
    neg = lambda terms: tuple((-c, s) for c, s in terms)
    if isinstance(target, MulLine):
        if side == "left":
            out[index] = MulLine(target.name, neg(target.left), target.right)
        else:
            out[index] = MulLine(target.name, target.left, neg(target.right))
    else:
        out[index] = LinLine(target.name, neg(target.terms))
    name = target.name

    def fix(terms):
        return tuple((-c if s == name else c, s) for c, s in terms)

    for k, line in enumerate(out):
        if k == index:
            continue
        if isinstance(line, MulLine):
            out[k] = MulLine(line.name, fix(line.left), fix(line.right))
        else:
            out[k] = LinLine(line.name, fix(line.terms))
    return out


def _negative_moves(lines, moves) -> list:
    found = []
    for k, side in moves:
        line = lines[k]
        terms = line.terms if not side else (line.left if side == "left" else line.right)
        if all(c < 0 for c, _ in terms):
            found.append((k, side))
    return found


def orient_signs(slp: StraightLineProgram, depth: int = 4) -> StraightLineProgram:
    """Choose signs of temporaries and product factors to avoid negations.

    Negating a temporary (or one factor of a product) together with every use
    of it leaves the outputs and the addition count unchanged.  A flip may
    turn a consumer all-negative, so each flip cascades into flipping such
    consumers (up to ``depth`` rounds) and is kept only if the number of
    combinations without a positive term drops.  Outputs are never negated.
    """
    lines = program_lines(slp)
    moves = []
    for k, line in enumerate(lines):
        if isinstance(line, MulLine):
            moves += [(k, "left"), (k, "right")]
        elif line.name[0] != "C":
            moves.append((k, ""))
    score = _negative_groups(lines)
    improved = True
    while improved and score:
        improved = False
        for move in moves:
            trial = _flip(lines, *move)
            done = {move}
            for _ in range(depth):
                pending = [mv for mv in _negative_moves(trial, moves) if mv not in done]
                if not pending:
                    break
                for mv in pending:
                    trial = _flip(trial, *mv)
                    done.add(mv)
            trial_score = _negative_groups(trial)
            if trial_score < score:
                lines, score = trial, trial_score
                improved = True
    return build_program(slp.dims, rebalance_lines(lines))

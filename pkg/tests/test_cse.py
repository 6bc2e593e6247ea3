from fractions import Fraction

import pytest

from mmscheme import catalog
from mmscheme.cse import (
    LinearFormSet,
    ReductionConfig,
    TieBreak,
    greedy_cse,
    rebalance_negations,
    reduce_scheme,
    scheme_form_sets,
)
from mmscheme.errors import PreconditionError
from mmscheme.formats import emit_slp, negation_diagnostics, parse_slp
from mmscheme.model import BilinearScheme, Kind, naive_addition_count, slp_addition_count
from mmscheme.verify import extract_scheme, verify_slp


def forms(*dicts, nvars=10, kind=Kind.A):
    return LinearFormSet(nvars, tuple(dicts), kind)


def evaluate(temps, form, values):
    """Expand temporaries back into the original variables."""
    env = dict(values)
    for td in temps:
        env[td.var] = td.cx * env[td.x] + td.cy * env[td.y]
    return sum(c * env[v] for v, c in form.items())


def test_shared_pair_extracted():
    fs = forms({3: 1, 6: 1, 0: 1}, {3: 1, 6: 1, 1: 1}, {3: 1, 6: 1})
    assert fs.additions() == 5
    temps, out = greedy_cse(fs)
    assert len(temps) == 1
    assert (temps[0].x, temps[0].y) == (3, 6)
    assert len(temps) + out.additions() == 3


def test_chained_temporaries():
    fs = forms({0: 1, 1: 1, 2: 1}, {0: 1, 1: 1, 2: 1, 3: 1}, nvars=4, kind=Kind.B)
    temps, out = greedy_cse(fs)
    assert [(t.var, t.x, t.y) for t in temps] == [(4, 0, 1), (5, 2, 4)]
    assert out.forms == ({5: 1}, {5: 1, 3: 1})
    assert len(temps) + out.additions() == 3


def test_ratio_patterns():
    fs = forms({0: 1, 1: -1}, {0: 2, 1: -2, 2: 1}, nvars=3)
    temps, out = greedy_cse(fs)
    assert len(temps) == 1
    assert out.forms[1] == {3: Fraction(2), 2: Fraction(1)}


def test_no_repeated_pair():
    fs = forms({0: 1, 1: 1}, {2: 1, 3: 1}, {0: 1, 2: -1})
    temps, out = greedy_cse(fs)
    assert temps == [] and out.forms == fs.forms


def test_rewriting_preserves_values(random_schemes):
    values = {k: Fraction(k * k + 3, k + 2) for k in range(40)}
    for scheme in random_schemes[:15]:
        for fs in scheme_form_sets(scheme):
            temps, out = greedy_cse(fs, ReductionConfig(TieBreak.SEEDED_RANDOM, seed=3))
            for before, after in zip(fs.forms, out.forms):
                assert evaluate(temps, after, values) == evaluate([], before, values)


def test_greedy_is_idempotent(naive_scheme):
    for fs in scheme_form_sets(naive_scheme):
        _, out = greedy_cse(fs)
        again, _ = greedy_cse(out)
        assert again == []


def same_up_to_product_signs(x, y):
    """Each product may have either factor negated, compensated in the outputs."""
    if x.dims != y.dims or x.rank != y.rank:
        return False
    for r in range(x.rank):
        cols = [[row[r] for row in M] for M in (x.U, x.V, x.W, y.U, y.V, y.W)]
        su, sv = (1 if cols[k + 3] == cols[k] else -1 for k in (0, 1))
        if cols[3] != [su * c for c in cols[0]] or cols[4] != [sv * c for c in cols[1]]:
            return False
        if cols[5] != [su * sv * c for c in cols[2]]:
            return False
    return True


def _reduce_inputs(random_schemes):
    builtins = [catalog.builtin(n) for n in catalog.NAMES]
    schemes = [b if isinstance(b, BilinearScheme) else extract_scheme(b) for b in builtins]
    return schemes + list(random_schemes)


def test_reduction_preserves_semantics(random_schemes):
    for scheme in _reduce_inputs(random_schemes):
        slp, report = reduce_scheme(scheme)
        assert verify_slp(slp).valid
        assert same_up_to_product_signs(extract_scheme(slp), scheme)
        assert report.output_additions == slp_addition_count(slp).adds_total
        assert report.output_additions <= report.input_naive_additions
        assert report.input_naive_additions == naive_addition_count(scheme).adds_total


def test_seeded_reduction_preserves_semantics(random_schemes):
    config = ReductionConfig(TieBreak.SEEDED_RANDOM, seed=11, restarts=3)
    for scheme in random_schemes[:20]:
        slp, report = reduce_scheme(scheme, config)
        assert verify_slp(slp).valid
        assert report.seed_used in (11, 12, 13)


def test_deterministic_results(naive_scheme, strassen):
    slp, report = reduce_scheme(naive_scheme)
    again, report2 = reduce_scheme(naive_scheme)
    assert slp == again and report == report2
    assert report.output_additions == 59
    assert report.temporaries == {"A": 7, "B": 6, "C": 9}
    assert report.seed_used is None
    assert reduce_scheme(strassen)[1].output_additions == 18


def test_restarts_never_worse(naive_scheme):
    single = reduce_scheme(naive_scheme, ReductionConfig(TieBreak.SEEDED_RANDOM, seed=4))[1]
    multi = reduce_scheme(naive_scheme, ReductionConfig(TieBreak.SEEDED_RANDOM, seed=4, restarts=10))[1]
    assert multi.output_additions <= single.output_additions


def test_reduce_requires_valid_scheme(file_scheme):
    U = [list(r) for r in file_scheme.U]
    U[0][1] = -U[0][1]
    with pytest.raises(PreconditionError):
        reduce_scheme(BilinearScheme((3, 3, 3), U, file_scheme.V, file_scheme.W))


def test_config_validation():
    with pytest.raises(ValueError):
        ReductionConfig(restarts=2)
    with pytest.raises(ValueError):
        ReductionConfig(TieBreak.SEEDED_RANDOM, restarts=0)
    with pytest.raises(ValueError):
        ReductionConfig(policy="greedy-potential")


def test_reduced_programs_avoid_negations(naive_scheme, file_scheme):
    for scheme in (naive_scheme, file_scheme):
        slp, _ = reduce_scheme(scheme)
        assert negation_diagnostics(slp) == []
        assert parse_slp(emit_slp(slp)) == slp


def test_rebalance_keeps_positive_programs(slp59):
    canonical = rebalance_negations(slp59)
    assert rebalance_negations(canonical) == canonical
    assert slp_addition_count(canonical) == slp_addition_count(slp59)
    assert extract_scheme(canonical) == extract_scheme(slp59)


def test_rebalance_flags_all_negative():
    slp = parse_slp("M0 = (-A0 - A1) * B0\nM1 = A1 * B1\nC0 = M0 + M1\nC1 = M1\n", dims=(1, 2, 2))
    out = rebalance_negations(slp)
    assert out == slp
    assert len(negation_diagnostics(out)) == 1

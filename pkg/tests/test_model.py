from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import brute_tensor, dense
from mmscheme import catalog
from mmscheme.errors import InvalidSchemeError, KindError, SSAError, SemanticError
from mmscheme.model import (
    BilinearScheme,
    Kind,
    Lin,
    Mul,
    Scale,
    StraightLineProgram,
    coefficient,
    lead_positive,
    matmul_tensor,
    naive_addition_count,
    scheme_to_naive_slp,
    slp_addition_count,
    standard_scheme,
)


def nnz_additions(scheme):
    """Oracle: nonzeros minus one per column of U, V and per row of W."""
    U, V, W = (np.array(M, dtype=object) != 0 for M in dense(scheme))
    return (
        int((U.sum(axis=0) - 1).sum()),
        int((V.sum(axis=0) - 1).sum()),
        int((W.sum(axis=1) - 1).sum()),
    )


@given(st.integers(-10**6, 10**6), st.integers(1, 10**6))
def test_coefficients_are_exact_and_canonical(num, den):
    c = coefficient(Fraction(num, den))
    assert c == Fraction(num, den)
    assert c.denominator > 0
    assert coefficient(f"{num}/{den}") == c


def test_float_coefficients_rejected():
    with pytest.raises(TypeError):
        coefficient(0.5)


@pytest.mark.parametrize("dims", [(1, 1, 1), (2, 2, 2), (3, 3, 3), (2, 3, 4)])
def test_tensor_matches_brute_force(dims):
    T = matmul_tensor(dims)
    ref = brute_tensor(dims)
    assert T.shape == ref.shape
    assert T.nnz() == int((ref != 0).sum()) == dims[0] * dims[1] * dims[2]
    for key in np.ndindex(*ref.shape):
        assert T[key] == ref[key]


def test_tensor_small_cases():
    assert matmul_tensor((1, 1, 1)).nnz() == 1
    assert matmul_tensor((2, 2, 2)).nnz() == 8
    T = matmul_tensor((3, 3, 3))
    assert T.nnz() == 27
    # A[0][1] * B[1][0] feeds C[0][0]
    assert T[1, 3, 0] == 1
    assert T[1, 0, 0] == 0


def test_scheme_validation():
    with pytest.raises(InvalidSchemeError):
        BilinearScheme((1, 1, 1), [[1]], [[1], [0]], [[1]])
    with pytest.raises(InvalidSchemeError):
        BilinearScheme((1, 1, 1), [[1, 0]], [[1, 1]], [[1, 1]])
    with pytest.raises(InvalidSchemeError):
        BilinearScheme((0, 1, 1), [], [], [])


def test_scheme_equality_ignores_name():
    a = BilinearScheme((1, 1, 1), [[1]], [[1]], [[1]], name="a")
    b = BilinearScheme((1, 1, 1), [[1]], [[1]], [[1]], name="b")
    assert a == b and hash(a) == hash(b)


@pytest.mark.parametrize("name", ["stapleton59-file", "stapleton59-naive", "strassen"])
def test_naive_count_matches_nonzero_oracle(name):
    scheme = catalog.builtin(name)
    rep = naive_addition_count(scheme)
    assert (rep.adds_A, rep.adds_B, rep.adds_C) == nnz_additions(scheme)
    assert rep.muls == scheme.rank


def test_naive_count_values(naive_scheme, strassen):
    rep = naive_addition_count(naive_scheme)
    assert (rep.adds_A, rep.adds_B, rep.adds_C, rep.adds_total) == (31, 33, 46, 110)
    assert rep.scales == 0
    assert naive_addition_count(strassen).adds_total == 18
    assert naive_addition_count(standard_scheme((3, 3, 3))).adds_total == 18


def test_naive_slp_shape(naive_scheme, strassen):
    slp = scheme_to_naive_slp(naive_scheme)
    lins = [i for i in slp.instructions if isinstance(i, Lin)]
    assert len(lins) == 110 and len(slp.products()) == 23
    assert slp_addition_count(slp) == naive_addition_count(naive_scheme)
    slp = scheme_to_naive_slp(strassen)
    assert len([i for i in slp.instructions if isinstance(i, Lin)]) == 18
    assert len(slp.products()) == 7


def test_rank_one_program():
    slp = scheme_to_naive_slp(BilinearScheme((1, 1, 1), [[1]], [[1]], [[1]]))
    assert slp.instructions == (Mul("M0", "A0", "B0"),)
    assert slp.outputs == ("M0",)
    rep = slp_addition_count(slp)
    assert (rep.adds_total, rep.muls, rep.scales) == (0, 1, 0)


def test_program_without_products_counts_zero():
    slp = StraightLineProgram((1, 1, 1), (), ("A0",))
    rep = slp_addition_count(slp)
    assert (rep.adds_A, rep.adds_B, rep.adds_C, rep.muls) == (0, 0, 0, 0)
    with pytest.raises(KindError):
        slp.check_kinds()


def test_scale_counting():
    scheme = BilinearScheme((1, 1, 1), [[2]], [[-1]], [[Fraction(-1, 2)]])
    rep = naive_addition_count(scheme)
    assert rep.adds_total == 0
    assert rep.scales == 3
    assert slp_addition_count(scheme_to_naive_slp(scheme)).scales == 3


def test_ssa_violations():
    with pytest.raises(SSAError):
        StraightLineProgram(
            (1, 1, 1), (Mul("M0", "A0", "B0"), Mul("M0", "A0", "B0")), ("M0",)
        )
    with pytest.raises(SemanticError):
        StraightLineProgram((1, 1, 1), (Mul("M0", "A0", "t0"),), ("M0",))
    with pytest.raises(SemanticError):
        StraightLineProgram((1, 1, 1), (Mul("M0", "A0", "B0"),), ("C0",))


def test_kind_mixing_rejected():
    slp = StraightLineProgram(
        (1, 1, 1),
        (Lin("t0", Fraction(1), "A0", Fraction(1), "B0"), Mul("M0", "t0", "B0")),
        ("M0",),
    )
    with pytest.raises(KindError):
        slp.check_kinds()


def test_scale_instruction_kinds():
    slp = StraightLineProgram(
        (1, 1, 1), (Scale("t0", Fraction(2), "A0"), Mul("M0", "t0", "B0")), ("M0",)
    )
    assert slp.check_kinds()["t0"] is Kind.A
    assert slp_addition_count(slp).scales == 1


@given(st.lists(st.integers(-3, 3).filter(bool), min_size=1, max_size=6))
def test_lead_positive_rotation(coeffs):
    terms = [(Fraction(c), f"x{k}") for k, c in enumerate(coeffs)]
    out = lead_positive(terms)
    assert sorted(out) == sorted(terms)
    if any(c > 0 for c in coeffs):
        assert out[0][0] > 0
    else:
        assert out == terms

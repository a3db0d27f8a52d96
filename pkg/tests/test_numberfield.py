"""Exactness tests for the Q(lambda) layer.

Expected values here come from two independent routes: hand reduction with
the defining relation (recorded inline next to each assertion) and sympy's
algebraic-number arithmetic as a cross-check oracle.
"""

from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from splitseq.numberfield import (
    DivisionByZero,
    NonMonic,
    NotIsolating,
    NotPerronFrobenius,
    NumberField,
    field_create,
    nf_arith,
    nf_const,
    nf_element,
    nf_gen,
    nf_sign,
    pf_eigendata,
    sturm_count,
)

F = Fraction

# lambda^2 = 3 lambda - 1, lambda = (3 + sqrt 5)/2 ~ 2.618
TRACE_FIELD = field_create([1, -3, 1], (F(5, 2), 3))
# golden ratio field, lambda^2 = lambda + 1
GOLDEN = field_create([-1, -1, 1], (F(3, 2), 2))


def test_field_create_accepts_isolating_interval():
    f = TRACE_FIELD
    assert f.degree == 2
    assert abs(f.root_float() - (3 + 5**0.5) / 2) < 1e-12


def test_field_create_rational_field():
    f = field_create([-1, 1], (F(1, 2), F(3, 2)))
    lam = nf_gen(f)
    assert lam.coeffs == (F(1),)
    assert nf_arith("mul", lam, lam).coeffs == (F(1),)


def test_field_create_negative_root():
    f = field_create([-2, 0, 1], (-2, -1))  # lambda = -sqrt 2
    assert nf_sign(nf_gen(f)) == -1
    assert abs(f.root_float() + 2**0.5) < 1e-12


def test_field_create_rejects_two_roots():
    # x^2 - 3x + 1 has roots ~0.382 and ~2.618; (0, 4) contains both
    with pytest.raises(NotIsolating):
        field_create([1, -3, 1], (0, 4))


def test_field_create_rejects_rootless_interval():
    with pytest.raises(NotIsolating):
        field_create([1, -3, 1], (1, 2))


def test_field_create_rejects_non_monic():
    with pytest.raises(NonMonic):
        field_create([1, -3, 2], (0, 1))
    with pytest.raises(NonMonic):
        field_create([F(1, 2), 1], (0, 1))


def test_sturm_count_basic():
    # (x-1)(x-2)(x-3): 3 roots in (0, 4], 1 in (0, 3/2]
    p = (F(-6), F(11), F(-6), F(1))
    assert sturm_count(p, F(0), F(4)) == 3
    assert sturm_count(p, F(0), F(3, 2)) == 1


def test_mul_reduces_by_defining_relation():
    lam = nf_gen(TRACE_FIELD)
    sq = nf_arith("mul", lam, lam)
    # lambda^2 = -1 + 3 lambda
    assert sq.coeffs == (F(-1), F(3))


def test_additive_identity():
    a = nf_element(TRACE_FIELD, (F(7, 3), F(-2, 5)))
    assert nf_arith("add", a, nf_const(TRACE_FIELD, 0)) == a


def test_inverse_of_generator():
    lam = nf_gen(TRACE_FIELD)
    inv = nf_arith("div", nf_const(TRACE_FIELD, 1), lam)
    # lambda (3 - lambda) = 3 lambda - lambda^2 = 1
    assert inv.coeffs == (F(3), F(-1))
    assert nf_arith("mul", lam, inv) == nf_const(TRACE_FIELD, 1)


def test_division_by_zero():
    with pytest.raises(DivisionByZero):
        nf_arith("div", nf_gen(TRACE_FIELD), nf_const(TRACE_FIELD, 0))


def test_sign_examples():
    lam = nf_gen(TRACE_FIELD)
    assert nf_sign(lam - 2) == 1  # 2.618... - 2
    assert nf_sign(nf_const(TRACE_FIELD, 0)) == 0
    assert nf_sign(lam - 3) == -1  # 2.618... - 3


def test_sign_stable_under_interval_refinement():
    lam_wide = nf_gen(TRACE_FIELD)
    narrow = TRACE_FIELD.refine(steps=20)
    lam_narrow = nf_gen(narrow)
    probes = [F(-5, 2), F(0), F(13, 5), F(21, 8), F(3)]
    for q in probes:
        wide_sign = nf_sign(lam_wide - q)
        narrow_sign = nf_sign(lam_narrow - nf_const(narrow, q))
        assert wide_sign == narrow_sign


rationals = st.fractions(
    min_value=-10, max_value=10, max_denominator=40
)


def _golden_value(a):
    x = sympy.Rational(1, 2) + sympy.sqrt(5) / 2
    return sympy.Rational(a.coeffs[0]) + sympy.Rational(a.coeffs[1]) * x


@given(rationals, rationals, rationals, rationals)
@settings(max_examples=100, deadline=None)
def test_sign_multiplicative(c0, c1, d0, d1):
    a = nf_element(GOLDEN, (c0, c1))
    b = nf_element(GOLDEN, (d0, d1))
    assert nf_sign(a * b) == nf_sign(a) * nf_sign(b)


@given(rationals, rationals)
@settings(max_examples=60, deadline=None)
def test_sign_of_reciprocal(c0, c1):
    a = nf_element(GOLDEN, (c0, c1))
    if a.is_zero():
        return
    assert nf_sign(a) * nf_sign(1 / a) == 1


@given(rationals, rationals)
@settings(max_examples=40, deadline=None)
def test_sign_matches_sympy(c0, c1):
    a = nf_element(GOLDEN, (c0, c1))
    val = _golden_value(a)
    expected = 0 if val == 0 else (1 if val > 0 else -1)
    assert nf_sign(a) == expected


@given(rationals, rationals, rationals, rationals)
@settings(max_examples=60, deadline=None)
def test_field_axioms_spot_checks(c0, c1, d0, d1):
    a = nf_element(GOLDEN, (c0, c1))
    b = nf_element(GOLDEN, (d0, d1))
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) - b == a
    if not b.is_zero():
        assert (a / b) * b == a


def test_pf_eigendata_trace_matrix():
    field, v = pf_eigendata([[2, 1], [1, 1]])
    assert field.minpoly == (1, -3, 1)
    lam = nf_gen(field)
    assert v[0] == nf_const(field, 1)
    assert v[1] == lam - 2
    # exact eigen-identity, coordinatewise
    assert 2 * v[0] + v[1] == lam * v[0]
    assert v[0] + v[1] == lam * v[1]


def test_pf_eigendata_one_by_one():
    field, v = pf_eigendata([[1]])
    assert field.minpoly == (-1, 1)
    assert v[0] == nf_const(field, 1)


def test_pf_eigendata_fibonacci():
    field, v = pf_eigendata([[0, 1], [1, 1]])
    assert field.minpoly == (-1, -1, 1)
    lam = nf_gen(field)
    assert v == [nf_const(field, 1), lam]
    assert nf_sign(lam - 1) == 1


def test_pf_eigendata_rejects_imprimitive():
    with pytest.raises(NotPerronFrobenius):
        pf_eigendata([[0, 1], [0, 0]])  # nilpotent
    with pytest.raises(NotPerronFrobenius):
        pf_eigendata([[1, 0], [0, 1]])  # reducible
    with pytest.raises(NotPerronFrobenius):
        pf_eigendata([[0, 1], [1, 0]])  # periodic


@st.composite
def primitive_matrices(draw):
    n = draw(st.integers(min_value=1, max_value=4))
    M = [
        [draw(st.integers(min_value=0, max_value=3)) for _ in range(n)]
        for _ in range(n)
    ]
    for i in range(n):  # positive diagonal makes any connected pattern primitive
        M[i][i] = max(M[i][i], 1)
        M[i][(i + 1) % n] = max(M[i][(i + 1) % n], 1)
    return M


@given(primitive_matrices())
@settings(max_examples=40, deadline=None)
def test_pf_eigendata_exact_eigenvector(M):
    field, v = pf_eigendata(M)
    lam = nf_gen(field)
    n = len(M)
    for i in range(n):
        lhs = nf_const(field, 0)
        for j in range(n):
            lhs = lhs + M[i][j] * v[j]
        assert lhs == lam * v[i]
    assert all(nf_sign(x) == 1 for x in v)
    # dominant root beats the float spectral radius estimate up to tolerance
    import numpy as np

    rho = max(abs(np.linalg.eigvals(np.array(M, dtype=float))))
    assert abs(field.root_float() - rho) < 1e-6


def test_refine_preserves_field_identity():
    refined = TRACE_FIELD.refine(steps=5)
    assert refined.minpoly == TRACE_FIELD.minpoly
    lo, hi = refined.root_interval
    wide_lo, wide_hi = TRACE_FIELD.root_interval
    assert wide_lo <= lo < hi <= wide_hi
    assert sturm_count(tuple(Fraction(c) for c in refined.minpoly), lo, hi) == 1

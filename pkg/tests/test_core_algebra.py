"""Exact scalars, multi-indices, jets, polynomials and trigonometric matrices."""
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from siapprox import multiindex as mi
from siapprox.errors import NonRemovableSingularity
from siapprox.exact import (GaussianRational, exact_affine_solve, exact_nullspace, exact_solve, fourier_monomial,
                            to_exact_array)
from siapprox.jet import TaylorJet, jet_div, jet_matmul
from siapprox.polynomial import Polynomial
from siapprox.trig import TrigPoly, TrigPolyMatrix

fracs = st.fractions(min_value=-20, max_value=20, max_denominator=12)
gauss = st.builds(GaussianRational, fracs, fracs)


# --- Gaussian rationals -------------------------------------------------------

def test_gaussian_rational_basic_values():
    i = GaussianRational(0, 1)
    assert i * i == -1
    assert (1 + i) / (1 - i) == i
    assert GaussianRational(Fraction(1, 3)) * 3 == 1
    assert complex(GaussianRational(Fraction(1, 2), -2)) == 0.5 - 2j


@given(gauss, gauss, gauss)
def test_gaussian_rational_field_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert (a * b) * c == a * (b * c)
    if b != 0:
        assert (a / b) * b == a
    assert (a * b).conjugate() == a.conjugate() * b.conjugate()


def test_fourier_monomial_matches_series():
    # coefficient of w^2/2! ... normalized: (-i j)^g / g!
    assert fourier_monomial((3,), (2,)) == GaussianRational(Fraction(-9, 2))
    assert fourier_monomial((1, 2), (1, 1)) == GaussianRational(-2)


def test_exact_solve_and_nullspace():
    A = to_exact_array([[1, 2], [3, 4]])
    x = exact_solve(A, to_exact_array([5, 6]))
    assert list(x) == [GaussianRational(-4), GaussianRational(Fraction(9, 2))]
    N = exact_nullspace(to_exact_array([[1, 1, 0], [0, 0, 1]]))
    assert len(N) == 1
    v = to_exact_array(N[0])
    assert v[0] + v[1] == 0 and v[2] == 0


def test_exact_affine_solve_reports_inconsistency():
    A = to_exact_array([[1, 1], [2, 2]])
    assert exact_affine_solve(A, to_exact_array([1, 3])) is None
    x0, basis = exact_affine_solve(A, to_exact_array([1, 2]))
    assert x0[0] + x0[1] == 1 and len(basis) == 1


# --- multi-indices -------------------------------------------------------------

def test_graded_order_ascending_within_degree():
    assert list(mi.graded(2, 2)) == [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]
    assert list(mi.graded(2, 1, descending=True)) == [(0, 0), (1, 0), (0, 1)]
    assert mi.size(3, 2) == 10


@given(st.integers(1, 3), st.integers(0, 5))
def test_graded_size_and_positions(d, N):
    idx = mi.graded(d, N)
    assert len(idx) == mi.size(d, N) == len(set(idx))
    pos = mi.position(d, N)
    assert all(pos[a] == i for i, a in enumerate(idx))


# --- jets --------------------------------------------------------------------

def _exp_jet(a, K):
    # jet of exp(a w) at 0 in d = 1: a^n / n!
    from math import factorial
    return TaylorJet(np.array([a ** n / factorial(n) for n in range(K + 1)], complex), [0.0], K)


def test_jet_product_of_exponentials():
    K = 6
    p = _exp_jet(1.0, K) * _exp_jet(2.0, K)
    np.testing.assert_allclose(p.coeffs, _exp_jet(3.0, K).coeffs, atol=1e-14)


def test_jet_div_removes_common_zero():
    K = 6
    w = TaylorJet.variable(0, [0.0], K, exact=True)
    num = w * w * (1 + w)
    q = jet_div(num, w * w)
    assert q.degree == K - 2
    assert q.coeff((0,)) == 1 and q.coeff((1,)) == 1 and q.coeff((2,)) == 0


def test_jet_div_rejects_pole():
    w = TaylorJet.variable(0, [0.0], 4, exact=True)
    with pytest.raises(NonRemovableSingularity):
        jet_div(w + 1 - 1 + w * 0 + w, w * w)


@given(st.integers(0, 3), st.integers(0, 3))
def test_zero_order_additive_under_products(m, n):
    K = 8
    w = TaylorJet.variable(0, [0.0], K, exact=True)
    a = w ** m * (2 + w)
    b = w ** n * (1 - w)
    assert (a * b).zero_order() == m + n


def test_jet_matmul_shapes():
    K = 2
    base = np.zeros(2)
    A = TaylorJet(np.ones((2, 3, mi.size(2, K)), complex), base, K)
    B = TaylorJet(np.ones((3, 1, mi.size(2, K)), complex), base, K)
    C = jet_matmul(A, B)
    assert C.lead_shape == (2, 1)
    assert C.coeff((0, 0))[0, 0] == 3


def test_compose_linear_swaps_variables():
    K = 3
    jet = TaylorJet.from_dict({(1, 0): 1.0, (0, 2): 5.0}, np.zeros(2), K)
    swapped = jet.compose_linear(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert swapped.coeff((0, 1)) == pytest.approx(1.0)
    assert swapped.coeff((2, 0)) == pytest.approx(5.0)


# --- polynomials ---------------------------------------------------------------

def test_normalized_monomial_products():
    x = Polynomial.monomial((1,))
    # x * x = 2 ()^2
    assert (x * x).coeffs == {(2,): 2}
    assert Polynomial.from_plain(1, {(2,): 1}).coeffs == {(2,): 2}


def test_diff_and_partial():
    p = Polynomial.from_plain(2, {(2, 1): 3})
    assert p.partial((1, 0)) == Polynomial.from_plain(2, {(1, 1): 6})
    assert p.diff((2, 0)) == Polynomial.from_plain(2, {(0, 1): 3})


@given(st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)), fracs, max_size=5),
       st.tuples(st.integers(0, 2), st.integers(0, 2)), st.tuples(st.integers(0, 2), st.integers(0, 2)))
def test_partials_commute(coeffs, a, b):
    p = Polynomial(2, coeffs)
    assert p.partial(a).partial(b) == p.partial(b).partial(a)


def test_exact_evaluation():
    p = Polynomial.from_plain(1, {(0,): 1, (2,): Fraction(1, 2)})
    assert p.eval_exact((3,)) == GaussianRational(Fraction(11, 2))
    assert p(np.array([3.0])) == pytest.approx(5.5)


# --- trigonometric polynomial matrices -----------------------------------------

def test_trig_eval_convention():
    t = TrigPoly({0: 2, 1: -1})
    # 2 - exp(-i w)
    assert t(0.0)[0, 0] == pytest.approx(1.0)
    assert t(np.pi)[0, 0] == pytest.approx(3.0)
    assert t(np.pi / 2)[0, 0] == pytest.approx(2 + 1j)


def test_trig_jet_matches_fourier_monomials():
    t = TrigPoly({0: 2, 1: -1})
    J = t.jet_at(np.zeros(1), 3, exact=True)
    c = J.coeffs[0, 0]
    assert c[0] == 1 and c[1] == GaussianRational(0, 1) and c[2] == GaussianRational(Fraction(1, 2))


@given(st.dictionaries(st.integers(-2, 2), fracs, min_size=1, max_size=4), st.floats(-3, 3))
def test_dual_is_pointwise_adjoint_of_reflection(coeffs, w):
    t = TrigPoly(coeffs)
    dual = t.dual()
    np.testing.assert_allclose(dual(w), np.conj(t(-w)).T, atol=1e-12)
    assert dual.dual()(w) == pytest.approx(t(w))


def test_matmul_and_dilate():
    A = TrigPolyMatrix({(0,): [[1, 0], [0, 1]], (1,): [[0, 1], [1, 0]]}, 1)
    w = 0.7
    np.testing.assert_allclose((A @ A)(w), A(w) @ A(w), atol=1e-13)
    np.testing.assert_allclose(A.dilate(2)(w), A(2 * w), atol=1e-13)

import json
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from siapprox import multiindex as mi
from siapprox.errors import DegenerateSymbol, DegenerateWarning
from siapprox.exact import GaussianRational
from siapprox.generators import box221, bspline, fredrickson
from siapprox.polynomial import Polynomial
from siapprox.quasi_interp import (MomentTable, bspline_semidiscrete, convolve_poly, moments, qi_bspline,
                                   qi_fsi, qi_psi, recurrence)

# Moments of B_k on [0, k]: m_g = int (-t)^g / g! B_k(t) dt.
# B1: -1/2, 1/6;  B2: -1, 7/12  (hand integration)
ORACLE = {
    1: {(0,): 1, (1,): Fraction(-1, 2), (2,): Fraction(1, 6)},
    2: {(0,): 1, (1,): Fraction(-1), (2,): Fraction(7, 12)},
}


@pytest.mark.parametrize("k", [1, 2])
def test_bspline_moments_oracle(k):
    m = moments(bspline(k), 2)
    for g, v in ORACLE[k].items():
        assert m[g] == GaussianRational(v)


def test_delta_moments():
    from siapprox.generators import delta
    m = moments(delta(1), 3)
    assert m[(0,)] == 1
    assert all(m[(j,)] == 0 for j in (1, 2, 3))


def test_bspline_moments_numeric():
    # compare with quadrature of the space-domain B3
    from scipy.interpolate import BSpline
    from scipy.integrate import quad
    B = BSpline.basis_element(np.arange(4.0), extrapolate=False)
    m = moments(bspline(3), 3)
    for j in range(4):
        val = quad(lambda t: (-t) ** j / math.factorial(j) * B(t), 0, 3)[0]
        assert abs(complex(m[(j,)]) - val) <= 1e-12


def test_convolve_poly_b2_linear():
    m = moments(bspline(2), 1)
    x = Polynomial.monomial((1,))
    out = convolve_poly(m, x)
    # B2 * x = x - 1
    assert out == x - Polynomial.constant(1)


def test_convolve_poly_degree_guard():
    m = moments(bspline(2), 1)
    with pytest.raises(ValueError):
        convolve_poly(m, Polynomial.monomial((2,)))


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_qi_bspline_exact(k):
    s = qi_bspline(k)
    assert s.exact
    assert s.max_residual == 0
    assert s.extra["semidiscrete_residual"] <= 1e-12


def test_qi_b2_g1():
    s = qi_psi(bspline(2), 2)
    assert s.g[(1,)] == Polynomial.monomial((1,)) + Polynomial.constant(1)


def test_qi_box_spline():
    s = qi_psi(box221(), 3)
    assert s.max_residual <= 1e-10
    assert s.extra["sf_order"] == 3


def test_qi_fsi_fredrickson_matches_box():
    s = qi_fsi(fredrickson(), ["delta", "delta"], 3)
    b = qi_psi(box221(), 3)
    assert s.max_residual <= 1e-10
    for a in b.g:
        assert s.g[a].is_close(b.g[a] * 1, 1e-10)
    assert s.extra["c_table_mismatch"] <= 1e-10


def test_qi_fsi_degenerate():
    with pytest.raises(DegenerateSymbol):
        qi_fsi(bspline(2), [{(0,): 1, (1,): -1}], 2)


def test_moment_table_degenerate():
    t = MomentTable(1, 1, {(0,): 0, (1,): 1})
    with pytest.raises(DegenerateSymbol):
        t.normalized()


def test_qi_psi_warns_on_low_order():
    with pytest.warns(DegenerateWarning):
        s = qi_psi(bspline(1), 3)
    assert s.extra["sf_order"] == 1
    # the recurrence is still solved and verified against the moments
    assert s.max_residual == 0


def test_qi_psi_normalizes():
    from siapprox.symbol import Scale
    with pytest.warns(DegenerateWarning):
        s = qi_psi(Scale(2, bspline(2)), 2, check_order=False)
    assert s.scale == 2
    assert s.g[(1,)] == Polynomial.monomial((1,)) + Polynomial.constant(1)


def test_semidiscrete_detects_wrong_scheme():
    s = qi_psi(bspline(2), 2)
    s.g[(1,)] = Polynomial.monomial((1,))
    assert bspline_semidiscrete(2, s) > 0.5


def test_recurrence_identity_table():
    g = recurrence({(0, 0): 1}, 2, 3)
    for a, p in g.items():
        assert p == Polynomial.monomial(a)


def test_scheme_json():
    s = qi_psi(bspline(2), 2)
    js = json.loads(s.to_json())
    assert js["k"] == 2 and js["max_residual"] == 0
    assert set(js["g"]) == {"(0)", "(1)"}


# -- properties --------------------------------------------------------------

coeff = st.fractions(min_value=-3, max_value=3, max_denominator=4)


@st.composite
def poly2(draw, deg=3):
    idx = mi.graded(2, deg)
    cs = draw(st.lists(coeff, min_size=len(idx), max_size=len(idx)))
    return Polynomial(2, {a: c for a, c in zip(idx, cs) if c})


M221 = moments(box221(), 3)


@settings(max_examples=30)
@given(poly2(), st.sampled_from([(1, 0), (0, 1), (1, 1), (0, 2)]))
def test_convolution_commutes_with_derivatives(q, gamma):
    lhs = convolve_poly(M221, q).partial(gamma)
    rhs = convolve_poly(M221, q.partial(gamma))
    assert lhs == rhs


@settings(max_examples=30)
@given(poly2())
def test_convolution_preserves_degree(q):
    out = convolve_poly(M221, q)
    assert out.degree == q.degree


@settings(max_examples=15)
@given(st.integers(1, 4), st.integers(-3, 3))
def test_reproduction_in_space(k, shift):
    # sum_j B_k(x - j) g_a(j) = x^a / a! at integer-shifted points
    s = qi_psi(bspline(k), k, check_order=False)
    pts = np.array([0.25, 0.5]) + shift
    assert bspline_semidiscrete(k, s, pts) <= 1e-10

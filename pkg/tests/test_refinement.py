import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from siapprox import multiindex as mi
from siapprox.errors import AssumptionViolated, InputError, ZeroSolutionOnly
from siapprox.exact import to_complex_array
from siapprox.generators import bspline
from siapprox.refinement import (Mask, assemble_L, bspline_mask, coherent_order, condition_Zk,
                                 counterexample_mask, dyadic_spectral_level, extend_solution,
                                 flatten_mask, flatten_residual_order, max_Zk_solve, quadratic_form_fit,
                                 random_instance, range_membership, solve_R, sum_rules_check,
                                 universal_quasi_interp)
from siapprox.trig import TrigPolyMatrix

V_B2 = TrigPolyMatrix.scalar({0: 2, 1: -1})  # 2 - e^{-iw}
ONE = TrigPolyMatrix.scalar({0: 1})


def _flat(J):
    return np.ravel(to_complex_array(J.coeffs))


# -- dyadic level -----------------------------------------------------------

@pytest.mark.parametrize("k", [1, 2, 3])
def test_dyadic_level_bspline(k):
    assert dyadic_spectral_level(bspline_mask(k)) == 0
    assert dyadic_spectral_level(bspline_mask(k) * 2) == 1


def test_dyadic_level_counterexample():
    assert dyadic_spectral_level(counterexample_mask()) == 2


def test_dyadic_level_none():
    assert dyadic_spectral_level(Mask.scalar({0: 3})) == -1


@settings(max_examples=25)
@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.sampled_from([0, 1, 2]))
def test_dyadic_level_similarity_invariant(entries, n):
    M = np.array(entries).reshape(2, 2) + 3 * np.eye(2)
    P0 = np.diag([2.0 ** n, 0.3])
    P1 = np.linalg.solve(M, P0 @ M)
    a = Mask(jets={(0,): P0}, d=1)
    b = Mask(jets={(0,): P1}, d=1)
    assert dyadic_spectral_level(a) == dyadic_spectral_level(b) == n


# -- L and the solution space ----------------------------------------------

def test_assemble_L_scalar_trivial():
    L, idx = assemble_L(bspline_mask(2), 0)
    assert idx == [(0,)]
    assert not L[0, 0]


def test_solve_R_bspline_normalized():
    b = solve_R(bspline_mask(2))
    assert b.dim == 1 and b.N == 0
    assert b.kernel[0].blocks[(0,)][0] == 1
    assert max(b.residuals()) <= 1e-9


def test_solve_R_zero_only():
    with pytest.raises(ZeroSolutionOnly):
        solve_R(Mask.scalar({0: 3}))


def test_solve_R_diag_matches_bsplines():
    b = solve_R(Mask.diag(bspline_mask(1), bspline_mask(2)))
    assert b.dim == 2
    # each solution is a combination of (B1, 0) and (0, B2); compare the
    # span of the jets at 0 against the B-spline jets
    ref = np.stack([np.concatenate([_flat(bspline(1).jet(np.zeros(1), 6)), np.zeros(7)]),
                    np.concatenate([np.zeros(7), _flat(bspline(2).jet(np.zeros(1), 6))])], axis=1)
    for phi in b.solutions:
        J = phi.jet(np.zeros(1), 6)
        x = np.concatenate([_flat(J[0]), _flat(J[1])])
        coef, *_ = np.linalg.lstsq(ref, x, rcond=None)
        assert np.linalg.norm(ref @ coef - x) <= 1e-10


def test_extension_matches_b2_symbol():
    b = solve_R(bspline_mask(2))
    J = b.solutions[0].jet(np.zeros(1), 6)
    S = bspline(2).jet(np.zeros(1), 6)
    assert np.abs(_flat(J) - _flat(S)).max() <= 1e-10


def test_lattice_jet_zero_order():
    phi = solve_R(bspline_mask(2)).solutions[0]
    assert phi.zero_order_at(np.array([2 * np.pi]), 6) == 2


def test_zero_kernel_vector_extends_to_zero():
    from siapprox.refinement import JetBlockVector
    w = JetBlockVector(0, {(0,): np.zeros(1, complex)}, 1, 1)
    e = extend_solution(w, bspline_mask(3), 8)
    assert all(not np.any(v) for v in e.blocks.values())


@pytest.mark.parametrize("mask", [bspline_mask(3), Mask.diag(bspline_mask(1), bspline_mask(2)),
                                  bspline_mask(2) * 2])
def test_bijection_and_growth(mask):
    b = solve_R(mask, K=10)
    assert max(b.residuals()) <= 1e-9
    A = b.growth_constant(10)
    for w in b.extended:
        for a, v in w.blocks.items():
            n = sum(a)
            if 1 <= n <= 10:
                assert np.abs(to_complex_array(v)).max() * mi.factorial(a) <= A ** n * (1 + 1e-12)


def test_float_kernel_is_orthonormal():
    P = Mask.diag(bspline_mask(1), bspline_mask(2))
    Pf = Mask(jets={a: to_complex_array(m) for a, m in P.jets0(3).items()}, d=1)
    b = solve_R(Pf, K=4)
    K = np.stack([w.stacked() for w in b.kernel], axis=1)
    assert np.allclose(K.conj().T @ K, np.eye(2))


# -- range membership --------------------------------------------------------

def test_range_membership_counterexample():
    rep = range_membership()
    for conv in ("ascending", "descending"):
        r = rep[conv]
        assert r["in_range"]["(0,1)"]
        assert r["in_range"]["(1,0)"]


def test_range_membership_witness():
    # (0, 1, -2) in the block coupled to (0,1) through D^(0,1)P is a preimage
    from siapprox.refinement import layer_maps
    maps, idx = layer_maps(counterexample_mask())
    r = 3
    x = np.zeros(len(idx) * r, complex)
    i = idx.index((0, 2))
    x[i * r:(i + 1) * r] = [0, 1, -2]
    w = np.zeros(len(idx) * r)
    j = idx.index((0, 1))
    w[j * r:(j + 1) * r] = [0, 0, 2]
    assert np.allclose(maps["(0,1)"].conj().T @ x, w)


# -- Condition Z_k and sum rules --------------------------------------------

def test_zk_b2():
    m = bspline_mask(2)
    assert condition_Zk(m, ONE, 1).passed
    rep = condition_Zk(m, ONE, 2)
    assert not rep.passed and rep.orders[(0,)] == 1
    assert condition_Zk(m, V_B2, 2).passed


def test_zk_degenerate_v():
    rep = condition_Zk(bspline_mask(2), TrigPolyMatrix.scalar({0: 1, 1: -1}), 1)
    assert not rep.passed and rep.reason == "Degenerate_v"


def test_sum_rules_b2():
    m = bspline_mask(2)
    assert sum_rules_check(m, V_B2, 2, version=2)
    assert sum_rules_check(m, V_B2, 2, version=1)
    zero = TrigPolyMatrix.scalar({0: 0})
    assert not sum_rules_check(m, zero, 1, 1) and not sum_rules_check(m, zero, 1, 2)
    with pytest.raises(InputError):
        sum_rules_check(m, V_B2, 2, version=3)


def test_sum_rules_equivalence_random():
    rng = np.random.default_rng(7)
    agree = 0
    for i in range(50):
        P, v, k = random_instance(rng, perturb=bool(i % 2))
        z = condition_Zk(P, v, k).passed
        s1 = sum_rules_check(P, v, k, 1)
        s2 = sum_rules_check(P, v, k, 2)
        assert z == s1 == s2, (i, z, s1, s2)
        agree += z
    assert 0 < agree < 50  # both outcomes are exercised


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_max_zk_bspline(k):
    sol = max_Zk_solve(bspline_mask(k), k_max=k + 1)
    assert sol.k == k
    assert condition_Zk(bspline_mask(k), sol.v, k).passed


def test_max_zk_diag():
    P = Mask.diag(bspline_mask(1), bspline_mask(2))
    sol = max_Zk_solve(P, 3, solve_R(P))
    assert sol.k >= 1
    assert condition_Zk(P, sol.v, sol.k).passed


def test_max_zk_identity():
    sol = max_Zk_solve(Mask.scalar({0: 1}), 3)
    assert sol.k == 0 and sol.v is None


# -- coherent orders ---------------------------------------------------------

def test_coherent_single_b2():
    res = coherent_order(solve_R(bspline_mask(2)))
    assert abs(res["fit"].slope - 4) <= 0.2
    assert res["order"] == 2


def test_coherent_diag_at_least_min():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = coherent_order(solve_R(Mask.diag(bspline_mask(1), bspline_mask(2))))
    assert res["fit"].slope >= 2 - 0.2


def test_coherent_flags_degenerate():
    with pytest.warns(Warning):
        res = coherent_order(solve_R(bspline_mask(2) * 2))
    assert res["degenerate"] and not res["regular"]


def test_zk_implies_vG0v_order():
    P = bspline_mask(2)
    fit = quadratic_form_fit(solve_R(P), V_B2)
    assert fit.slope >= 4 - 0.2


# -- flattening --------------------------------------------------------------

def test_flatten_identity():
    T = flatten_mask(Mask.scalar({0: 1}), 3)
    for a, t in T.items():
        assert np.allclose(to_complex_array(t), 1.0 if not any(a) else 0.0)


def test_flatten_random_first_order():
    rng = np.random.default_rng(3)
    J1 = rng.normal(size=(2, 2))
    P = Mask(jets={(0,): np.eye(2), (1,): J1}, d=1)
    T = flatten_mask(P, 2)
    assert flatten_residual_order(P, T, 2) >= 2


def test_flatten_requires_identity():
    with pytest.raises(AssumptionViolated):
        flatten_mask(bspline_mask(2) * 2, 2)


# -- universal quasi-interpolants -------------------------------------------

def test_universal_qi_b2():
    rep = universal_quasi_interp(bspline_mask(2), V_B2, 2)
    assert rep["surjective"] and rep["max_residual"] == 0


def test_universal_qi_not_surjective():
    rep = universal_quasi_interp(bspline_mask(2) * 2, ONE, 2)
    assert not rep["surjective"] and "note" in rep


def test_universal_qi_diag():
    P = Mask.diag(bspline_mask(1), bspline_mask(2))
    basis = solve_R(P)
    sol = max_Zk_solve(P, 3, basis)
    ok = 0
    for i in range(basis.dim):
        rep = universal_quasi_interp(P, sol.v, 1, index=i, basis=basis)
        if rep["surjective"]:
            assert rep["max_residual"] <= 1e-10
            ok += 1
    assert ok >= 1


def test_mask_json_roundtrip_shape():
    js = counterexample_mask().to_json()
    assert js["r"] == 3 and "(0,1)" in js["jets"]

import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from siapprox import generators as gen
from siapprox.decay import fit_power_law
from siapprox.errors import AnnulusDegenerate, DegenerateWarning, TailBoundWarning
from siapprox.ladder import (BracketConfig, bracket, dual_extend, eig_upper_bound, fsi_order, generalized_min_eig,
                             gramian, pencil_min, psi_order, psi_order_consistency, refinable_lower_bound, sf_order,
                             superfunction_sample)
from siapprox.symbol import Bump, Constant
from siapprox.trig import TrigPolyMatrix

TWO_PI = 2 * np.pi


def _partition_of_unity(w):
    # independent oracle: sum_m sin^2(w/2) / (w/2 + pi m)^2, summed in closed form by brute force
    m = np.arange(-200000, 200001)
    return float(np.sum(np.sin(w / 2) ** 2 / (w / 2 + np.pi * m) ** 2))


@pytest.mark.parametrize("w", [0.3, 1.0, 2.0])
def test_box_bracket_is_one(w):
    b1 = gen.bspline(1)
    val, tail = bracket(b1, b1, np.array([w]))
    assert abs(val - 1) < 1e-6
    assert abs(val - _partition_of_unity(w)) < 1e-6


def test_truncated_box_bracket_vanishes_at_origin():
    b1 = gen.bspline(1)
    val, _ = bracket(b1, b1, np.array([0.0]), truncated=True)
    assert abs(val) < 1e-12


@given(st.floats(-3, 3))
def test_bracket_hermitian_and_nonnegative(w):
    b2, b3 = gen.bspline(2), gen.bspline(3)
    a, _ = bracket(b2, b3, np.array([w]))
    b, _ = bracket(b3, b2, np.array([w]))
    c, _ = bracket(b3, b3, np.array([w]))
    assert a == pytest.approx(np.conj(b), abs=1e-12)
    assert c.real >= 0 and abs(c.imag) < 1e-12


def test_brute_force_radius_agreement():
    b2 = gen.bspline(2)
    w = np.array([[0.7]])
    g1 = gramian(b2, w, cfg=BracketConfig(lattice_radius=50, radius_cap=50, tolerance=np.inf))
    g4 = gramian(b2, w, cfg=BracketConfig(lattice_radius=200, radius_cap=200, tolerance=np.inf))
    assert abs(g1.G[0, 0, 0] - g4.G[0, 0, 0]) <= g1.tail + 1e-15


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_sf_order_bsplines(k):
    assert sf_order(gen.bspline(k))["order"] == k


def test_sf_order_box_and_delta():
    assert sf_order(gen.box221())["order"] == 3
    assert sf_order(Constant(1, 1))["order"] == 0


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_psi_order_bsplines(k):
    fit, flags = psi_order(gen.bspline(k))
    assert abs(fit.order - k) <= 0.1
    assert not flags["degenerate_at_origin"]


def test_psi_order_box221_and_convolution():
    assert abs(psi_order(gen.box221())[0].order - 3) <= 0.1
    assert abs(psi_order(gen.convolve(gen.bspline(2), gen.bspline(3)))[0].order - 5) <= 0.15


def test_convolution_additivity_inequality():
    for k1, k2 in [(1, 1), (1, 2), (2, 2)]:
        o = psi_order(gen.convolve(gen.bspline(k1), gen.bspline(k2)))[0].order
        assert o >= psi_order(gen.bspline(k1))[0].order + psi_order(gen.bspline(k2))[0].order - 0.2


def test_psi_order_consistency_bspline():
    table = psi_order_consistency(gen.bspline(2), [-1.0, 0.0, 0.5])
    assert all(abs(r["order"] - 2) <= 0.15 for r in table["rows"])
    assert table["monotone"]


def test_delta_has_order_zero():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TailBoundWarning)
        table = psi_order_consistency(Constant(1, 1), [-1.0, -0.5],
                                      BracketConfig(lattice_radius=2000, radius_cap=2000))
    assert all(abs(r["order"]) <= 0.1 for r in table["rows"])


def test_degenerate_origin_flagged():
    psi = gen.superfunction_symbol(gen.bad_pair_v(4), gen.bad_pair(4))
    with pytest.warns(DegenerateWarning):
        fit, flags = psi_order(psi)
    assert flags["degenerate_at_origin"]


def test_gramian_rank_one_structure():
    rng = np.random.default_rng(0)
    Phi = gen.GeneratorVector([gen.bspline(2), gen.bspline(3)])
    w = rng.uniform(-np.pi, np.pi, size=(6, 1))
    for s in (0.0, 0.5):
        gs = gramian(Phi, w, s)
        outer = np.einsum("ni,nj->nij", gs.b, gs.b.conj())
        np.testing.assert_allclose(gs.G - gs.G0, outer, atol=1e-10)
        np.testing.assert_allclose(gs.G, np.conj(np.swapaxes(gs.G, 1, 2)), atol=1e-12)
        assert np.all(np.linalg.eigvalsh(gs.G0) > -1e-12)
    pair = gen.GeneratorVector([gen.bspline(1), gen.bspline(2)])
    np.testing.assert_allclose(gramian(pair, w).G[:, 0, 0], 1.0, atol=1e-6)


def test_fredrickson_gramian_at_origin():
    gs = gramian(gen.fredrickson(), np.zeros((1, 2)))
    G0 = gs.G0[0]
    assert np.all(np.isfinite(G0))
    np.testing.assert_allclose(G0, G0.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(G0).min() > -1e-14


def test_pencil_agrees_with_generalized_eig():
    rng = np.random.default_rng(5)
    for _ in range(5):
        A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        G0 = A @ A.conj().T
        b = rng.normal(size=3) + 1j * rng.normal(size=3)
        lam, v = pencil_min(G0[None], b[None])
        ref = generalized_min_eig(G0, G0 + np.outer(b, b.conj()))
        assert lam[0] == pytest.approx(ref, rel=1e-9)
        ratio = (v[0].conj() @ G0 @ v[0]).real / (v[0].conj() @ (G0 + np.outer(b, b.conj())) @ v[0]).real
        assert ratio == pytest.approx(ref, rel=1e-8)


def test_fsi_order_fredrickson_and_singleton():
    assert abs(fsi_order(gen.fredrickson()).order - 3) <= 0.15
    assert abs(fsi_order(gen.bspline(2)).order - 2) <= 0.1


def test_fsi_order_shift_invariance():
    b2 = gen.bspline(2)
    Phi = gen.GeneratorVector([b2, gen.shifted(b2, [1.0])])
    assert abs(fsi_order(Phi).order - 2) <= 0.15


def test_eig_upper_bound_fredrickson():
    out = eig_upper_bound(gen.fredrickson(), [[0, TWO_PI], [TWO_PI, 0]])
    assert abs(out["rho_min"].slope - 6) <= 0.3
    assert abs(out["rho_max"].slope - 4) <= 0.3
    assert out["bound"] == 3


def test_eig_upper_bound_singleton_and_empty():
    out = eig_upper_bound(gen.bspline(2), [[TWO_PI]])
    assert out["bound"] == 2
    assert eig_upper_bound(gen.bspline(2), [])["bound"] == np.inf


def test_upper_bound_dominates_order():
    Phi = gen.fredrickson()
    o = fsi_order(Phi).order
    for I in ([[TWO_PI, 0]], [[TWO_PI, TWO_PI]], [[0, TWO_PI], [TWO_PI, 0]],
              [[TWO_PI, TWO_PI], [2 * TWO_PI, 0]]):
        assert o <= eig_upper_bound(Phi, I)["bound"] + 0.1
    assert eig_upper_bound(Phi, [[TWO_PI, 0]])["bound"] == np.inf


def test_superfunction_certificate():
    assert superfunction_sample(gen.fredrickson())["certified"]
    single = superfunction_sample(gen.bspline(2))
    assert single["certified"]
    np.testing.assert_allclose(np.abs(single["pencil_vectors"]), 1.0)


def test_bad_pair_superfunction_flagged():
    with pytest.warns(DegenerateWarning):
        out = superfunction_sample(gen.bad_pair(4), v=gen.bad_pair_v(4))
    assert out["degenerate"]


@pytest.mark.parametrize("k", [2, 3])
def test_refinable_lower_bound_bsplines(k):
    fit, lams = refinable_lower_bound(gen.bspline(k))
    assert abs(fit.slope / 2 - k) <= 0.2
    assert np.all(np.diff(lams) < 0)


def test_refinable_lower_bound_band_limited_and_constant():
    fit, lams = refinable_lower_bound(Bump(np.pi, 1))
    assert np.all(lams[1:] == 0)
    assert fit.infinite
    with pytest.raises(AnnulusDegenerate), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        refinable_lower_bound(Constant(1, 1))


def test_dual_extend_trivial_masks():
    P = TrigPolyMatrix.scalar({0: 1})
    w = np.linspace(0.2, 0.4, 5)
    out = dual_extend(P, lambda x: np.full((x.shape[0], 1), 2.0 + 1j), w, 3)
    np.testing.assert_allclose(out, np.conj(2.0 + 1j))
    I2 = TrigPolyMatrix.identity(2, 1)
    v0 = lambda x: np.stack([np.sin(x[:, 0]), np.cos(x[:, 0])], axis=-1)
    np.testing.assert_allclose(dual_extend(I2, v0, w, 2), v0(4 * w[:, None]))


def test_dual_extend_identity():
    # v*(w/2^m) phi(w/2^m + a) = v*(w) phi(w + 2^m a) for the B2 mask
    P = TrigPolyMatrix.scalar({0: 0.25, 1: 0.5, 2: 0.25})
    phi = gen.bspline(2)
    rng = np.random.default_rng(0)
    c = rng.normal(size=3) + 1j * rng.normal(size=3)
    v0 = lambda x: (np.exp(-1j * np.outer(x[:, 0], [0, 1, 2])) @ c)[:, None]
    w = np.linspace(np.pi / 4 + 0.01, np.pi / 2, 7)
    for m in range(1, 5):
        inner = dual_extend(P, v0, w / 2 ** m, m)[:, 0]
        outer = np.conj(v0(w[:, None])[:, 0])
        for a in (TWO_PI, 2 * TWO_PI):
            lhs = inner * phi((w / 2 ** m + a)[:, None])
            rhs = outer * phi((w + 2 ** m * a)[:, None])
            np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_fit_power_law_snaps():
    r = 0.4 * 2.0 ** -np.arange(6)
    fit = fit_power_law(r, 3 * r ** 4)
    assert fit.snapped == 4 and fit.order == 2
    noisy = fit_power_law(r, r ** 4 * (1 + 0.9 * np.array([0, 1, 0, 1, 0, 1])))
    assert noisy.snapped is None

"""Acceptance suite: twelve criteria, one PASS/FAIL line each.

Tolerances are the stated ones.  Slopes are compared unsnapped wherever a
tolerance band is given, so the band is actually exercised.  Elapsed time
is reported next to the budget but does not decide the verdict.

Run directly with ``python3 tests/test_acceptance.py`` or through pytest.
"""
import functools
import time
import warnings

import numpy as np
import pytest

from siapprox import generators as gen
from siapprox.empirical import order_curve
from siapprox.ladder import (BracketConfig, eig_upper_bound, fsi_order, psi_order, psi_order_consistency,
                             refinable_lower_bound, sf_order, superfunction_sample)
from siapprox.quasi_interp import qi_psi
from siapprox.refinement import (bspline_mask, condition_Zk, counterexample_mask, dyadic_spectral_level,
                                 max_Zk_solve, quadratic_form_fit, random_instance, range_membership,
                                 solve_R, sum_rules_check)
from siapprox.trig import TrigPolyMatrix

TWO_PI = 2 * np.pi


class Criterion:
    """Collects named checks and prints a single verdict line."""

    def __init__(self, number, title, budget):
        self.number, self.title, self.budget = number, title, budget
        self.checks = []
        self.t0 = time.perf_counter()

    def check(self, name, ok, detail=""):
        self.checks.append((name, bool(ok), detail))

    def finish(self, capsys):
        dt = time.perf_counter() - self.t0
        ok = all(c[1] for c in self.checks)
        failed = [f"{n} ({d})" if d else n for n, good, d in self.checks if not good]
        info = "; ".join(f"{n}: {d}" for n, _, d in self.checks if d)
        line = (f"[{'PASS' if ok else 'FAIL'}] criterion {self.number:>2}: {self.title} | {info} | "
                f"{dt:.1f}s (budget {self.budget}s)")
        with capsys.disabled():
            print("\n" + line)
        assert ok, "failed checks: " + ", ".join(failed)


@functools.lru_cache(maxsize=None)
def empirical(name):
    Phi = {"B1": gen.bspline(1), "B2": gen.bspline(2), "M221": gen.box221()}[name]
    return order_curve(None, Phi)


def test_criterion_01_bspline_family(capsys):
    c = Criterion(1, "B-spline family", 10)
    for k in range(1, 5):
        sf = sf_order(gen.bspline(k))["order"]
        c.check(f"sf_order(B{k})", sf == k, f"{sf}")
        fit, _ = psi_order(gen.bspline(k))
        c.check(f"psi_order(B{k})", fit.order == k and fit.residual <= 0.1,
                f"{fit.order:g} res {fit.residual:.1e}")
        scheme = qi_psi(gen.bspline(k), k)
        c.check(f"qi(B{k})", scheme.max_residual <= 1e-10, f"{scheme.max_residual:.1e}")
    c.finish(capsys)


def test_criterion_02_box_spline(capsys):
    c = Criterion(2, "box spline M221", 30)
    fit, _ = psi_order(gen.box221())
    c.check("analytic order", fit.order == 3 and abs(fit.slope / 2 - 3) <= 0.2, f"{fit.slope / 2:.3f}")
    curve = empirical("M221")
    c.check("empirical slope", abs(curve.slope - 3) <= 0.2, f"{curve.slope:.3f}")
    c.finish(capsys)


def test_criterion_03_fredrickson(capsys):
    c = Criterion(3, "Fredrickson C1 cubics", 60)
    Phi = gen.fredrickson()
    eb = eig_upper_bound(Phi, [[0, TWO_PI], [TWO_PI, 0]])
    c.check("rho_min order", abs(eb["rho_min"].slope - 6) <= 0.3, f"{eb['rho_min'].slope:.3f}")
    c.check("rho_max order", abs(eb["rho_max"].slope - 4) <= 0.3, f"{eb['rho_max'].slope:.3f}")
    c.check("bound", eb["bound"] == 3, f"{eb['bound']:g}")
    cert = superfunction_sample(Phi)
    c.check("certificate", cert["certified"], f"inf|e0*Phi| {cert['inf_abs_eigen']:.3f}")
    fit = fsi_order(Phi)
    c.check("final order", fit.order == 3, f"{fit.order:g} (slope/2 {fit.slope / 2:.3f})")
    c.finish(capsys)


def test_criterion_04_convolution(capsys):
    c = Criterion(4, "convolution additivity", 10)
    fit, _ = psi_order(gen.convolve(gen.bspline(2), gen.bspline(3)))
    c.check("order(B2*B3)", abs(fit.slope / 2 - 5) <= 0.2, f"{fit.slope / 2:.3f}")
    c.finish(capsys)


def test_criterion_05_counterexample(capsys):
    c = Criterion(5, "refinement counterexample", 5)
    mask = counterexample_mask()
    N = dyadic_spectral_level(mask)
    c.check("N", N == 2, f"{N}")
    rep = range_membership(mask)
    good, detail = [], []
    for conv, r in rep.items():
        res = r["residuals"]
        good.append(res["(0,1)"] <= 1e-8 and res["(1,0)"] <= 1e-8 and res["0"] >= 0.1)
        detail.append(f"{conv} L*(0,1) {res['(0,1)']:.1e} L*(1,0) {res['(1,0)']:.1e} L*0 {res['0']:.1e}")
    c.check("membership verdicts under some convention", any(good), ", ".join(detail))
    c.finish(capsys)


def test_criterion_06_sum_rules(capsys):
    c = Criterion(6, "sum-rule equivalence", 20)
    rng = np.random.default_rng(2024)
    agree, passed = 0, 0
    for i in range(50):
        P, v, k = random_instance(rng, perturb=bool(i % 2))
        z = condition_Zk(P, v, k).passed
        s1 = sum_rules_check(P, v, k, 1)
        s2 = sum_rules_check(P, v, k, 2)
        agree += (z == s1 == s2)
        passed += z
    c.check("identical verdicts", agree == 50, f"{agree}/50 agree, {passed} pass Z_k")
    c.finish(capsys)


def test_criterion_07_mask_solver(capsys):
    c = Criterion(7, "mask solver", 10)
    for k in (1, 2, 3):
        ks = max_Zk_solve(bspline_mask(k), k_max=k + 1).k
        c.check(f"k*(B{k})", ks == k, f"{ks}")
    v = TrigPolyMatrix.scalar({0: 2, 1: -1})
    c.check("v = 2 - e^-iw passes Z_2", condition_Zk(bspline_mask(2), v, 2).passed)
    c.finish(capsys)


def test_criterion_08_zero_order_of_vG0v(capsys):
    c = Criterion(8, "Z_k implies order 2k of v*G0v", 30)
    rng = np.random.default_rng(0)
    cfg = BracketConfig(lattice_radius=3, radius_cap=3, tolerance=np.inf)
    n, worst = 0, np.inf
    bad = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for i in range(50):
            P, v, _ = random_instance(rng, perturb=(i % 4 == 3))
            k = int(rng.integers(1, 4))
            if not condition_Zk(P, v, k).passed:
                continue
            fit = quadratic_form_fit(solve_R(P), v, cfg=cfg)
            n += 1
            margin = fit.slope - (2 * k - 0.2)
            worst = min(worst, margin)
            if margin < 0:
                bad.append(i)
    c.check("all passing instances", n > 0 and not bad, f"{n} instances, worst margin {worst:.2f}")
    c.finish(capsys)


def test_criterion_09_bad_superfunction(capsys):
    c = Criterion(9, "bad superfunction (k=4)", 30)
    k = 4
    Phi = gen.bad_pair(k)
    v = gen.bad_pair_v(k)
    psi = gen.superfunction_symbol(v, Phi)
    for p in ([TWO_PI, 0.0], [0.0, TWO_PI], [TWO_PI, TWO_PI]):
        o = psi.zero_order_at(p, k + 3)
        c.check(f"zero order at {tuple(int(round(x / TWO_PI)) for x in p)}*2pi", o >= 6, f"{o}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fit, flags = psi_order(psi)
        sample = superfunction_sample(Phi, v=v)
    c.check("psi_order", fit.order == 4, f"{fit.order:g} (slope/2 {fit.slope / 2:.3f})")
    c.check("degeneracy flag", flags["degenerate_at_origin"] and sample["degenerate"] and caught,
            f"|psi(0)| {flags['phi_at_origin']:.1e}")
    c.finish(capsys)


def test_criterion_10_sobolev_consistency(capsys):
    c = Criterion(10, "Sobolev consistency", 10)
    table = psi_order_consistency(gen.bspline(2), [-1.0, 0.0, 0.5])
    for row in table["rows"]:
        c.check(f"s={row['s']:g}", abs(row["slope"] / 2 - 2) <= 0.15, f"{row['slope'] / 2:.3f}")
    c.check("monotone", table["monotone"])
    c.finish(capsys)


def test_criterion_11_refinable_lower_bound(capsys):
    c = Criterion(11, "lambda_m lower bound", 10)
    fit, _ = refinable_lower_bound(gen.bspline(3))
    c.check("k(B3)", abs(fit.slope / 2 - 3) <= 0.2, f"{fit.slope / 2:.3f}")
    c.finish(capsys)


def test_criterion_12_empirical_vs_analytic(capsys):
    c = Criterion(12, "empirical vs analytic", 60)
    for name, Phi in (("B1", gen.bspline(1)), ("B2", gen.bspline(2)), ("M221", gen.box221())):
        fit, _ = psi_order(Phi)
        slope = empirical(name).slope
        c.check(name, abs(slope - fit.order) <= 0.25, f"slope {slope:.3f} vs {fit.order:g}")
    c.finish(capsys)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))

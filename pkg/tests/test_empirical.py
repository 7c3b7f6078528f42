import csv
import io
import json
import warnings

import numpy as np
import pytest

from siapprox.empirical import (ErrorCurve, TestFunction, gauss_box, order_curve, perturbed_errors,
                                projection_error)
from siapprox.generators import as_vector, bspline, delta


def test_gauss_box_integrates_polynomials():
    x, w = gauss_box(2, -1.0, 2.0, 8)
    assert np.isclose(w.sum(), 9.0)
    assert np.isclose(np.sum(w * x[:, 0] ** 3 * x[:, 1] ** 2), (16 - 1) / 4 * (8 + 1) / 3)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_bspline_slopes(k):
    c = order_curve(None, bspline(k))
    assert abs(c.order - k) <= 0.15
    assert c.fitted_points == 4


def test_sobolev_shift():
    c = order_curve(None, bspline(2), s=1.0)
    assert abs(c.slope - 1) <= 0.15
    assert abs(c.order - 2) <= 0.15


def test_delta_slope_zero():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        c = order_curve(None, delta(1), h_range=[2.0 ** -j for j in range(3, 7)])
    assert abs(c.slope) <= 0.15
    assert c.error2[-1] > 0


def test_member_of_space_has_zero_error():
    f = TestFunction.from_symbol(bspline(2))
    assert projection_error(f, bspline(2), 1.0) <= 1e-8


def test_optimal_coefficients_beat_perturbations():
    base, pert = perturbed_errors(None, bspline(2), n=5)
    assert all(p > base for p in pert)


def test_band_limited_path_agrees_with_lattice_path():
    # at h = 1 the bump is inside |xi| < pi, so both formulas apply
    from siapprox.empirical import _error_general
    from siapprox.ladder import BracketConfig
    f = TestFunction.bump(1)
    a = projection_error(f, bspline(2), 1.0, nodes=64)
    b = _error_general(f, as_vector(bspline(2)), 1.0, 0.0, BracketConfig(), 64)
    # the lattice path truncates at |alpha| <= 24, worth about 1e-5 relative here
    assert abs(a - b) <= 1e-4 * a


def test_non_band_limited_target():
    f = TestFunction.from_symbol(bspline(4))
    c = order_curve(f, bspline(2), h_range=[2.0 ** -j for j in range(2, 6)])
    assert abs(c.order - 2) <= 0.15


def test_smoothness_saturation():
    # B2 lies in H^s only for s < 3/2, which caps the rate of the B4 space
    f = TestFunction.from_symbol(bspline(2))
    c = order_curve(f, bspline(4))
    assert abs(c.order - 1.5) <= 0.15


def test_threads_give_same_curve():
    a = order_curve(None, bspline(2))
    b = order_curve(None, bspline(2), workers=3)
    assert a.error2 == b.error2


def test_curve_exports():
    c = order_curve(None, bspline(1))
    rows = list(csv.reader(io.StringIO(c.to_csv())))
    assert rows[0] == ["h", "error2", "fitted"]
    assert len(rows) == len(c.h) + 1
    # the fitted column matches the data on the fitted points
    for r in rows[-4:]:
        assert abs(np.log(float(r[1])) - np.log(float(r[2]))) <= 0.05
    js = json.loads(c.to_json())
    assert js["slope"] == c.slope
    assert isinstance(c, ErrorCurve)

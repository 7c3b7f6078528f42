"""Estimate the order of the zero of a sampled nonnegative function at 0."""
from dataclasses import dataclass, field

import numpy as np

DEFAULT_RADII = tuple(0.4 * 2.0 ** -j for j in range(6))
SNAP_TOL = 0.25
_TINY = 1e-300


def default_directions(d):
    """Unit directions: +-1 in 1D, 8 off-axis angles in 2D, a fixed spread otherwise."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        th = (2 * np.arange(8) + 1) * np.pi / 8
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    rng = np.random.default_rng(12345)
    u = rng.normal(size=(16, d))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


@dataclass
class DecayFit:
    """Fitted power law ``f(r) ~ c r^slope`` near ``r = 0``.

    Attributes
    ----------
    radii, values : ndarray
        Sample radii and the value at each radius (max over directions).
    slope : float
        Least-squares exponent over the fitted tail (``inf`` if f == 0).
    residual : float
        Max deviation of ``log f`` from the fitted line on the fitted points.
    snapped : int or None
        Nearest integer exponent when both the rounding gap and the
        residual are within ``snap_tol``.
    """

    radii: np.ndarray
    values: np.ndarray
    slope: float
    intercept: float
    residual: float
    snapped: object = None
    n_fit: int = 3
    snap_tol: float = SNAP_TOL
    samples: np.ndarray = field(default=None, repr=False)
    directions: np.ndarray = field(default=None, repr=False)

    @property
    def infinite(self):
        return np.isinf(self.slope)

    @property
    def exponent(self):
        """Snapped exponent when available, else the raw slope."""
        return float(self.snapped) if self.snapped is not None else float(self.slope)

    @property
    def order(self):
        """Half the exponent (``|f| ~ r^(2k)`` gives ``k``)."""
        return self.exponent / 2.0

    def to_dict(self):
        return {
            "radii": [float(r) for r in self.radii],
            "values": [float(v) for v in self.values],
            "slope": _num(self.slope),
            "residual": _num(self.residual),
            "snapped": None if self.snapped is None else _num(self.snapped),
            "order": _num(self.order),
        }

    def rows(self):
        """(radius, direction index, value) triples for CSV export."""
        out = []
        if self.samples is None:
            return [(float(r), -1, float(v)) for r, v in zip(self.radii, self.values)]
        for i, r in enumerate(self.radii):
            for j, v in enumerate(self.samples[i]):
                out.append((float(r), j, float(v)))
        return out


def _num(x):
    x = float(x)
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def fit_power_law(radii, values, n_fit=None, snap_tol=SNAP_TOL, samples=None, directions=None):
    """Fit ``log values = slope * log radii + c`` over the smallest radii."""
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    order = np.argsort(-radii)
    radii, values = radii[order], values[order]
    n = len(radii)
    n_fit = n_fit or max(2, n // 2)
    tail_r, tail_v = radii[-n_fit:], values[-n_fit:]
    if np.all(tail_v <= _TINY):
        return DecayFit(radii, values, np.inf, -np.inf, 0.0, None, n_fit, snap_tol, samples, directions)
    if np.any(tail_v <= _TINY):
        # isolated exact zeros: floor them, the residual will expose it
        tail_v = np.maximum(tail_v, _TINY)
    x, y = np.log(tail_r), np.log(tail_v)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.max(np.abs(y - (slope * x + intercept))))
    snapped = None
    rs = round(slope)
    if abs(slope - rs) <= snap_tol and residual <= snap_tol:
        snapped = int(rs)
    return DecayFit(radii, values, float(slope), float(intercept), residual, snapped, n_fit, snap_tol,
                    samples, directions)


def radial_fit(func, d, radii=DEFAULT_RADII, directions=None, center=None, snap_tol=SNAP_TOL):
    """Sample ``func`` on rays from ``center`` and fit the max over directions.

    ``func`` maps an ``(n, d)`` array of points to ``n`` nonnegative values.
    """
    dirs = default_directions(d) if directions is None else np.atleast_2d(directions)
    radii = np.asarray(radii, dtype=float)
    pts = radii[:, None, None] * dirs[None, :, :]
    if center is not None:
        pts = pts + np.asarray(center, dtype=float)
    vals = np.asarray(func(pts.reshape(-1, d)), dtype=float).reshape(len(radii), len(dirs))
    vals = np.abs(vals)
    return fit_power_law(radii, vals.max(axis=1), snap_tol=snap_tol, samples=vals, directions=dirs)

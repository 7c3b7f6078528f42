"""Direct measurement of approximation errors from dilated shift-invariant spaces.

The squared distance of ``f`` from ``S^h`` in the homogeneous Sobolev
seminorm of order ``s`` is computed in the Fourier domain.  For a
band-limited ``f`` with ``supp f^ in |w| < pi / h`` only the zero lattice
term of each bracket survives and, after the change of variables
``w = h xi``,

    dist_s(f, S^h)^2 = (2 pi)^-d  int |f^(xi)|^2 |xi|^2s (1 - Q(h xi)) dxi

with ``Q = b* G^+ b``.  ``1 - Q`` is evaluated as the pencil value
``1 / (1 + b* G0^+ b)``, which keeps full relative accuracy as ``h -> 0``.

Other targets are handled on the torus: at each node the lattice samples of
``f(./h)`` are fitted by those of Phi in weighted least squares and the
residual is integrated on a Gauss-Legendre mesh graded toward the origin.
"""
import csv
import io
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .decay import fit_power_law
from .errors import QuadratureWarning
from .generators import as_vector
from .ladder import BracketConfig, _weights, gramian, lattice, pencil_min
from .symbol import Bump

DEFAULT_NODES = 64
DEFAULT_H = tuple(2.0 ** -j for j in range(3, 9))
FIT_POINTS = 4


class TestFunction:
    """Target function given by its Fourier transform.

    Parameters
    ----------
    fhat : callable
        Maps ``(n, d)`` frequencies to ``(n,)`` values.
    d : int
    radius : float or None
        Radius of a ball containing the support of ``fhat`` (None when
        the transform is not band-limited).
    smoothness : float
        Sobolev smoothness tag (``inf`` for band-limited functions).
    label : str
    """

    __test__ = False  # not a pytest class

    def __init__(self, fhat, d, radius=None, smoothness=np.inf, label="f"):
        self.fhat = fhat
        self.d = int(d)
        self.radius = radius
        self.smoothness = smoothness
        self.label = label

    @property
    def band_limited(self):
        return self.radius is not None

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float).reshape(-1, self.d)
        return np.asarray(self.fhat(omega))

    @classmethod
    def bump(cls, d=1, fraction=0.9):
        """Smooth bump ``exp(-1 / (1 - |w / (fraction pi)|^2))`` on ``|w| < fraction pi``."""
        R = fraction * np.pi
        return cls(Bump(R, d), d, radius=R, label=f"bump({fraction})")

    @classmethod
    def from_symbol(cls, symbol, label=None):
        """Use a generator's transform as the target (not band-limited)."""
        smooth = symbol.decay - symbol.d / 2
        return cls(symbol, symbol.d, None, smooth, label or repr(symbol))


def _as_test_function(f, d):
    if f is None:
        return TestFunction.bump(d)
    if isinstance(f, TestFunction):
        return f
    return TestFunction.from_symbol(f)


def gauss_box(d, a, b, n):
    """Tensor Gauss-Legendre nodes and weights on ``[a, b]^d``."""
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (b - a) * x + 0.5 * (b + a)
    w = 0.5 * (b - a) * w
    grids = np.meshgrid(*([x] * d), indexing="ij")
    wgrid = np.meshgrid(*([w] * d), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([g.ravel() for g in wgrid], axis=-1), axis=-1)
    return nodes, weights


def _rank_drop_warning(G0, b):
    G = G0 + np.einsum("ni,nj->nij", b, b.conj())
    ev = np.linalg.eigvalsh(G)
    rel = ev[:, 0] / np.maximum(ev[:, -1], np.finfo(float).tiny)
    if np.any(rel < 1e-13) and G.shape[-1] > 1:
        warnings.warn("Gramian is nearly rank deficient at some quadrature nodes", QuadratureWarning, stacklevel=3)


def _error_band_limited(f, Phi, h, s, cfg, nodes):
    xi, w = gauss_box(Phi.d, -f.radius, f.radius, nodes)
    fv = np.abs(f(xi)) ** 2 * _weights(xi, s)
    keep = fv > 0
    xi, w, fv = xi[keep], w[keep], fv[keep]
    sample = gramian(Phi, h * xi, s, cfg)
    lam, _ = pencil_min(sample.G0, sample.b)
    _rank_drop_warning(sample.G0, sample.b)
    return float(np.sum(w * fv * lam) / (2 * np.pi) ** Phi.d)


def _lattice_brackets(f, Phi, h, s, cfg, nodes):
    """Brackets of ``F = f(h .)`` against ``Phi`` on the torus, by direct lattice sums."""
    omega, w = gauss_box(Phi.d, -np.pi, np.pi, nodes)
    R = cfg.lattice_radius or (24 if Phi.d == 1 else 8)
    alphas = lattice(Phi.d, R, include_zero=True)
    n, r, d = len(omega), Phi.r, Phi.d
    ff = np.zeros(n)
    pf = np.zeros((n, r), complex)
    G = np.zeros((n, r, r), complex)
    for a in alphas:
        pts = omega + a
        wt = _weights(pts, s)
        F = f(pts / h) * h ** (-d)
        P = Phi(pts)
        ff += np.abs(F) ** 2 * wt
        pf += P * (F.conj() * wt)[:, None]
        G += np.einsum("ni,nj,n->nij", P, P.conj(), wt)
    return omega, w, ff, pf, G


def graded_nodes(h, n_panel=16, a=np.pi):
    """Composite Gauss-Legendre rule on ``[-a, a]`` with panels graded toward 0.

    Panel edges are ``0, +-h/4, +-h/2, +-h, +-2h, ...`` so that features of
    width ``h`` near the origin are resolved.
    """
    edges = [0.0]
    t = h / 4
    while t < a:
        edges.append(t)
        t *= 2
    edges.append(a)
    edges = np.array(edges)
    edges = np.concatenate([-edges[:0:-1], edges])
    x, w = np.polynomial.legendre.leggauss(n_panel)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel()
    weights = (0.5 * (hi - lo) * w).ravel()
    return nodes, weights


def _graded_box(d, h, n_panel):
    x, w = graded_nodes(h, n_panel)
    grids = np.meshgrid(*([x] * d), indexing="ij")
    wgrid = np.meshgrid(*([w] * d), indexing="ij")
    return (np.stack([g.ravel() for g in grids], axis=-1),
            np.prod(np.stack([g.ravel() for g in wgrid], axis=-1), axis=-1))


def _error_general(f, Phi, h, s, cfg, nodes, chunk=2048):
    """Torus integral of the pointwise least-squares residual.

    At each ``w`` the coefficients minimize
    ``sum_a |F(w + 2 pi a) - tau . Phi(w + 2 pi a)|^2 |w + 2 pi a|^2s`` over
    the truncated lattice.  Forming the residual vector explicitly avoids
    the cancellation in ``[F, F] - b* G^+ b``.
    """
    d = Phi.d
    n_panel = max(4, nodes // (4 if d == 1 else 8))
    omega_all, w_all = _graded_box(d, h, n_panel)
    R = cfg.lattice_radius or (24 if d == 1 else 8)
    alphas = lattice(d, R, include_zero=True)
    total = 0.0
    for i0 in range(0, len(omega_all), chunk):
        omega, w = omega_all[i0:i0 + chunk], w_all[i0:i0 + chunk]
        pts = (omega[:, None, :] + alphas[None, :, :]).reshape(-1, d)
        sw = np.sqrt(_weights(pts, s)).reshape(len(omega), -1)
        F = (f(pts / h) * h ** (-d)).reshape(len(omega), -1) * sw
        A = Phi(pts).reshape(len(omega), len(alphas), Phi.r) * sw[:, :, None]
        x = np.einsum("nij,nj->ni", np.linalg.pinv(A, rcond=1e-13), F)
        res = F - np.einsum("nai,ni->na", A, x)
        total += float(np.sum(w * np.sum(np.abs(res) ** 2, axis=1)))
    return total / (2 * np.pi) ** d * h ** (d - 2 * s)


def projection_error(f, Phi, h=1.0, s=0.0, cfg=None, nodes=DEFAULT_NODES):
    """Squared distance of ``f`` from the dilated space ``S^h_Phi``.

    Parameters
    ----------
    f : TestFunction, FourierSymbol or None
        None selects the default band-limited bump.
    Phi : GeneratorVector or FourierSymbol
    h : float
    s : float
        Sobolev order of the (homogeneous) error norm.
    cfg : BracketConfig, optional
    nodes : int
        Gauss-Legendre nodes per dimension.

    Returns
    -------
    float
    """
    Phi = as_vector(Phi)
    f = _as_test_function(f, Phi.d)
    cfg = cfg or BracketConfig(s=s)
    if f.band_limited and f.radius * h < np.pi:
        return _error_band_limited(f, Phi, h, s, cfg, nodes)
    return _error_general(f, Phi, h, s, cfg, nodes)


def perturbed_errors(f, Phi, n=5, eps=0.1, s=0.0, seed=0, nodes=32, cfg=None):
    """Errors at ``h = 1`` for the optimal coefficients and ``n`` random periodic perturbations.

    Returns
    -------
    base : float
    perturbed : list of float
    """
    Phi = as_vector(Phi)
    f = _as_test_function(f, Phi.d)
    cfg = cfg or BracketConfig(s=s)
    rng = np.random.default_rng(seed)
    omega, w, ff, pf, G = _lattice_brackets(f, Phi, 1.0, s, cfg, nodes)
    tau0 = np.einsum("nij,nj->ni", np.linalg.pinv(G, rcond=1e-13, hermitian=True), pf)
    shifts = lattice(Phi.d, 1, include_zero=True)

    def err(tau):
        val = ff - 2 * np.real(np.einsum("ni,ni->n", tau.conj(), pf)) + np.real(
            np.einsum("ni,nij,nj->n", tau.conj(), G, tau))
        return float(np.sum(w * val) / (2 * np.pi) ** Phi.d)

    base = err(tau0)
    out = []
    for _ in range(n):
        c = rng.normal(size=(len(shifts), Phi.r)) + 1j * rng.normal(size=(len(shifts), Phi.r))
        t = np.exp(1j * omega @ shifts.T) @ c
        out.append(err(tau0 + eps * t))
    return base, out


@dataclass
class ErrorCurve:
    """Errors on a dyadic ``h`` sweep and the fitted order."""
    h: list
    error2: list
    slope: float
    residual: float
    fitted_points: int
    s: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def order(self):
        """Fitted order ``k`` (the slope plus ``s``)."""
        return self.slope + self.s

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf)
        wr.writerow(["h", "error2", "fitted"])
        a = np.log(np.sqrt(self.error2[-self.fitted_points]))
        h0 = np.log(self.h[-self.fitted_points])
        for h, e in zip(self.h, self.error2):
            fitted = float(np.exp(2 * (a + self.slope * (np.log(h) - h0))))
            wr.writerow([repr(h), repr(e), repr(fitted)])
        return buf.getvalue()


def order_curve(f=None, Phi=None, s=0.0, h_range=DEFAULT_H, cfg=None, nodes=DEFAULT_NODES,
                fit_points=FIT_POINTS, workers=1):
    """Sweep ``h`` and fit ``log dist = slope * log h + c`` on the finest points.

    The slope estimates ``k - s``; ``ErrorCurve.order`` adds ``s`` back.
    ``workers > 1`` evaluates the h values in a thread pool.
    """
    Phi = as_vector(Phi)
    h = sorted((float(x) for x in h_range), reverse=True)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            e2 = list(ex.map(lambda x: projection_error(f, Phi, x, s, cfg, nodes), h))
    else:
        e2 = [projection_error(f, Phi, x, s, cfg, nodes) for x in h]
    n = min(fit_points, len(h))
    err = np.sqrt(np.maximum(e2[-n:], np.finfo(float).tiny))
    fit = fit_power_law(np.array(h[-n:]), err)
    return ErrorCurve(h, [float(x) for x in e2], float(fit.slope), float(fit.residual), n, s,
                      {"nodes": nodes, "target": _as_test_function(f, Phi.d).label})

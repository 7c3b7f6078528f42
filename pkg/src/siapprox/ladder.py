"""Brackets, Gramians and approximation orders of stationary ladders.

Lattice sums run over ``alpha in 2*pi*Z^d`` with ``|alpha|_inf <= 2*pi*R``.
The truncated variants (alpha != 0) are always summed directly, never as
"full minus the alpha = 0 term", since near the origin they are many
orders of magnitude smaller than the full sums.
"""
import warnings
from dataclasses import asdict, dataclass
from math import pi

import numpy as np

from .decay import DEFAULT_RADII, DecayFit, default_directions, fit_power_law, radial_fit
from .errors import (AnnulusDegenerate, DegenerateWarning, InconclusiveAtDegree, NotAnalytic,
                     NullPencil, TailBoundWarning)
from .generators import GeneratorVector, as_vector

DEFAULT_RADIUS = {1: 64, 2: 12}
RADIUS_CAP = {1: 2 ** 18, 2: 48}
RANK_TOL = 1e-13


@dataclass
class BracketConfig:
    """Lattice truncation controls.

    Attributes
    ----------
    s : float
        Sobolev exponent.
    lattice_radius : int or None
        Starting radius R; defaults depend on the dimension.
    radius_cap : int or None
        Largest radius tried while the tail bound exceeds ``tolerance``.
    tail_decay : float or None
        Decay exponent m of the symbols; taken from the symbols when None.
    tolerance : float
        Target for the absolute tail bound of every bracket entry.
    """

    s: float = 0.0
    lattice_radius: int = None
    radius_cap: int = None
    tail_decay: float = None
    tolerance: float = 1e-6
    chunk: int = 2_000_000

    def to_dict(self):
        return asdict(self)


def lattice(d, R, include_zero=False):
    """Points ``2*pi*alpha`` with ``|alpha|_inf <= R`` (zero excluded by default)."""
    rng = np.arange(-R, R + 1)
    grid = np.stack(np.meshgrid(*([rng] * d), indexing="ij"), axis=-1).reshape(-1, d)
    nz = np.any(grid != 0, axis=1)
    pts = grid[nz]
    if include_zero:
        pts = np.concatenate([np.zeros((1, d), dtype=int), pts])
    return 2 * pi * pts.astype(float)


def reduce_mod(omega):
    """Map points into the fundamental domain ``[-pi, pi)^d``."""
    return (np.asarray(omega, dtype=float) + pi) % (2 * pi) - pi


def _weights(x, s):
    n = np.linalg.norm(x, axis=-1)
    if s == 0:
        return np.ones_like(n)
    with np.errstate(divide="ignore"):
        w = n ** (2 * s)
    return w


def shell_sum(p, d, R):
    """Upper bound for ``sum_{|n|_inf > R} (1 + 2*pi*|n|_inf - pi)^(-p)``."""
    if p <= d:
        return np.inf
    n = np.arange(R + 1, R + 20001, dtype=float)
    count = 2 * d * (2 * n + 1) ** (d - 1)
    terms = count * (1 + 2 * pi * n - pi) ** (-p)
    last = n[-1]
    # integral remainder of the same bound past the explicit terms
    rem = 2 * d * 3 ** (d - 1) * (2 * pi) ** (-p) * last ** (d - p) / (p - d)
    return float(terms.sum() + rem)


def tail_estimate(Phi, omega, s, R, m):
    """Tail bound ``C^2 sum_{|alpha| > R} (1 + |w + alpha|)^(2s - 2m)`` per sample.

    ``C`` is the empirical decay constant on the outermost shell.
    """
    if np.isinf(m):
        return 0.0
    d = Phi.d
    p = 2 * (m - s)
    S = shell_sum(p, d, R)
    if np.isinf(S):
        return np.inf
    shell = lattice(d, R)
    shell = shell[np.max(np.abs(shell), axis=1) >= 2 * pi * R - 1e-9]
    pts = omega[:, None, :] + shell[None, :, :]
    vals = np.abs(Phi(pts.reshape(-1, d))).reshape(omega.shape[0], -1, Phi.r)
    rad = 1 + np.linalg.norm(pts, axis=-1)
    C = float(np.max(vals.max(axis=-1) * rad ** m)) if vals.size else 0.0
    return C * C * S


def _resolve_radius(Phi, omega, cfg):
    d = Phi.d
    R = cfg.lattice_radius or DEFAULT_RADIUS.get(d, 4)
    cap = max(cfg.radius_cap or RADIUS_CAP.get(d, 8), R)
    m = cfg.tail_decay if cfg.tail_decay is not None else Phi.decay
    tail = tail_estimate(Phi, omega, cfg.s, R, m)
    while tail > cfg.tolerance and R < cap:
        R = min(2 * R, cap)
        tail = tail_estimate(Phi, omega, cfg.s, R, m)
    if tail > cfg.tolerance:
        warnings.warn(f"lattice tail bound {tail:.3g} exceeds tolerance {cfg.tolerance:.3g} at R={R}",
                      TailBoundWarning, stacklevel=3)
    return R, tail


@dataclass
class GramianSample:
    """Gramians at a batch of points.

    ``G0`` sums over alpha != 0; ``G = G0 + b b*`` with ``b = |w|^s Phi(w)``.
    Arrays have shape ``(n, r, r)``; ``b`` has shape ``(n, r)``.
    """

    omega: np.ndarray
    G: np.ndarray
    G0: np.ndarray
    b: np.ndarray
    tail: float
    radius: int


def gramian(Phi, omega, s=0.0, cfg=None, reduce=False):
    """Gramian and truncated Gramian of ``Phi`` at ``omega`` (``(n, d)`` or ``(d,)``)."""
    Phi = as_vector(Phi)
    cfg = cfg or BracketConfig(s=s)
    if cfg.s != s:
        cfg = BracketConfig(**{**cfg.to_dict(), "s": s})
    omega = np.asarray(omega, dtype=float)
    single = omega.ndim == 1 and not (Phi.d == 1 and omega.ndim == 1 and omega.shape[0] != 1)
    if Phi.d == 1 and omega.ndim <= 1:
        omega = omega.reshape(-1, 1)
        single = omega.shape[0] == 1
    elif omega.ndim == 1:
        omega = omega[None, :]
    if reduce:
        omega = reduce_mod(omega)
    R, tail = _resolve_radius(Phi, omega, cfg)
    alphas = lattice(Phi.d, R)
    n, r, d = omega.shape[0], Phi.r, Phi.d
    G0 = np.zeros((n, r, r), complex)
    step = max(1, cfg.chunk // max(1, n))
    for start in range(0, len(alphas), step):
        a = alphas[start:start + step]
        pts = omega[:, None, :] + a[None, :, :]
        vals = Phi(pts.reshape(-1, d)).reshape(n, len(a), r)
        w = _weights(pts, s)
        G0 += np.einsum("nlr,nlq,nl->nrq", vals, vals.conj(), w)
    b = Phi(omega) * np.sqrt(_weights(omega, s))[:, None]
    G = G0 + b[:, :, None] * b[:, None, :].conj()
    return GramianSample(omega, G, G0, b, tail, R)


def bracket(phi, psi, omega, cfg=None, truncated=False):
    """Bracket ``sum_alpha phi(w+a) conj(psi(w+a)) |w+a|^(2s)``.

    Returns ``(values, tail_bound)``; ``truncated`` drops alpha = 0.
    """
    cfg = cfg or BracketConfig()
    gs = gramian(GeneratorVector([phi, psi]), omega, cfg.s, cfg)
    M = gs.G0 if truncated else gs.G
    vals = M[:, 0, 1]
    return (vals[0] if vals.shape[0] == 1 and np.ndim(omega) <= (1 if phi.d > 1 else 0) else vals), gs.tail


# ---------------------------------------------------------------------------
# pencils

def generalized_min_eig(G0, G, rel_tol=1e-12):
    """Smallest eigenvalue of the pencil (G0, G) on the range of G.

    Eigendirections of G with eigenvalue <= rel_tol * trace(G) are dropped.
    """
    lam, V = np.linalg.eigh(G)
    tr = max(np.trace(G).real, 0.0)
    keep = lam > rel_tol * tr
    if not np.any(keep):
        raise NullPencil("Gramian is numerically zero")
    B = V[:, keep] / np.sqrt(lam[keep])
    M = B.conj().T @ G0 @ B
    return float(np.linalg.eigvalsh((M + M.conj().T) / 2)[0])


def pencil_min(G0, b, floor_rel=1e-15):
    """Minimum of ``v*G0 v / (v*G0 v + |B*v|^2)`` and its minimizer, batched.

    Uses the low-rank structure ``G = G0 + B B*``: the minimum equals
    ``1 / (1 + q)`` with ``q`` the largest eigenvalue of ``B* G0^+ B``, which
    stays accurate when the ratio is many orders of magnitude below 1.
    Directions where both ``G0`` and ``B`` vanish carry 0/0 ratios and are
    ignored.

    Parameters
    ----------
    G0 : ndarray, shape (n, r, r)
    b : ndarray, shape (n, r) or (n, r, m)

    Returns
    -------
    lam : ndarray, shape (n,)
    v : ndarray, shape (n, r)
        Unit minimizers, phase fixed so the largest entry is real positive.
    """
    G0 = np.asarray(G0)
    B = np.asarray(b)
    if B.ndim == 2:
        B = B[:, :, None]
    lam0, U = np.linalg.eigh(G0)
    bmax = np.abs(B).max(axis=(-2, -1))[:, None] ** 2
    scale = np.maximum(lam0.max(axis=-1, keepdims=True), bmax)
    if np.any(scale <= 0):
        bad = np.nonzero(scale[:, 0] <= 0)[0]
        raise NullPencil(f"Gramian vanishes at sample(s) {bad.tolist()}")
    floor = floor_rel * np.maximum(lam0.max(axis=-1, keepdims=True), np.finfo(float).tiny)
    C = np.einsum("nij,nim->njm", U.conj(), B)  # U* B
    tiny_b = (np.abs(C) ** 2).sum(axis=-1) <= floor_rel * scale
    small = lam0 <= floor
    ignore = small & tiny_b
    inv = np.where(ignore, 0.0, 1.0 / np.where(small, floor, lam0))
    Q = np.einsum("njm,nj,njk->nmk", C.conj(), inv, C)
    qv, qU = np.linalg.eigh((Q + np.conj(np.swapaxes(Q, -1, -2))) / 2)
    q = np.maximum(qv[:, -1], 0.0)
    lam = 1.0 / (1.0 + q)
    coef = inv * np.einsum("njm,nm->nj", C, qU[:, :, -1])
    v = np.einsum("nij,nj->ni", U, coef)
    nrm = np.linalg.norm(v, axis=-1, keepdims=True)
    v = np.where(nrm > 0, v / np.where(nrm > 0, nrm, 1), U[:, :, 0])
    return lam, _fix_phase(v)


def _fix_phase(v):
    idx = np.argmax(np.abs(v), axis=-1)
    lead = np.take_along_axis(v, idx[:, None], axis=-1)
    ph = np.where(np.abs(lead) > 0, lead / np.where(np.abs(lead) > 0, np.abs(lead), 1), 1)
    return v / ph


# ---------------------------------------------------------------------------
# Strang-Fix and orders

def lattice_representatives(d, R=None):
    R = R if R is not None else (3 if d == 1 else 2)
    return lattice(d, R)


def sf_order(phi, max_k=8, lattice_radius=None):
    """Strang-Fix order: min zero order of ``phi`` over punctured lattice points.

    Returns
    -------
    dict
        ``order`` (int), ``per_point`` (list of ``(point/2pi, order)``)
        where an order of ``max_k + 1`` means "vanishes beyond max_k".

    Raises
    ------
    InconclusiveAtDegree
        When every representative vanishes to the full degree ``max_k``.
    """
    pts = lattice_representatives(phi.d, lattice_radius)
    per = []
    for p in pts:
        o = phi.zero_order_at(p, max_k)
        per.append((tuple(int(round(x / (2 * pi))) for x in p), int(o)))
    order = min(o for _, o in per)
    if order > max_k:
        raise InconclusiveAtDegree(f"all lattice jets vanish up to degree {max_k}")
    return {"order": order, "per_point": per, "max_k": max_k}


def _ratio_psi(phi, s, cfg):
    vec = as_vector(phi)

    def f(w):
        gs = gramian(vec, w, s, cfg)
        num = gs.G0[:, 0, 0].real
        den = gs.G[:, 0, 0].real
        with np.errstate(divide="ignore", invalid="ignore"):
            out = num / den * _weights(w, s)
        return np.nan_to_num(out, nan=0.0)
    return f


def psi_order(phi, s=0.0, cfg=None, radii=DEFAULT_RADII, directions=None):
    """Approximation order of the ladder generated by one function.

    Samples ``[phi,phi]^0_s / [phi,phi]_s * |w|^(2s)`` on rays and fits its
    exponent 2k.  Returns ``(fit, flags)``; ``flags['degenerate_at_origin']``
    is set when ``|phi(0)|`` is below tolerance and ``s >= 0``.
    """
    cfg = cfg or BracketConfig(s=s)
    phi0 = abs(complex(np.ravel(phi(np.zeros(phi.d)))[0]))
    flags = {"degenerate_at_origin": bool(phi0 < 1e-9 and s >= 0), "phi_at_origin": phi0}
    if flags["degenerate_at_origin"]:
        warnings.warn("generator symbol vanishes at the origin", DegenerateWarning, stacklevel=2)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fit = radial_fit(_ratio_psi(phi, s, cfg), phi.d, radii, directions)
    flags["tail_warnings"] = sorted({str(w.message) for w in caught if issubclass(w.category, TailBoundWarning)})
    return fit, flags


def psi_order_consistency(phi, s_list, cfg=None, tol=0.1):
    """Orders for several Sobolev exponents plus a monotonicity check.

    The order for t <= s must not fall below the order for s (up to ``tol``).
    """
    rows = []
    for s in sorted(s_list):
        c = BracketConfig(**{**(cfg.to_dict() if cfg else {}), "s": s})
        fit, flags = psi_order(phi, s, c)
        rows.append({"s": s, "order": fit.order, "slope": fit.slope, "residual": fit.residual,
                     "snapped": fit.snapped, "flags": flags})
    mono = all(rows[i]["order"] >= rows[j]["order"] - tol
               for i in range(len(rows)) for j in range(i, len(rows)))
    return {"rows": rows, "monotone": mono}


def _ratio_fsi(Phi, s, cfg):
    def f(w):
        gs = gramian(Phi, w, s, cfg)
        lam, _ = pencil_min(gs.G0, gs.b)
        return lam * _weights(w, s)
    return f


def fsi_order(Phi, s=0.0, cfg=None, radii=DEFAULT_RADII, directions=None):
    """Approximation order of a finitely generated ladder via the Gramian pencil."""
    Phi = as_vector(Phi)
    cfg = cfg or BracketConfig(s=s)
    return radial_fit(_ratio_fsi(Phi, s, cfg), Phi.d, radii, directions)


def _index_set(I, d):
    I = np.atleast_2d(np.asarray(I, dtype=float)) if len(I) else np.zeros((0, d))
    return I.reshape(-1, d)


def eig_matrix(Phi, I, omega, s=0.0):
    """``A(w) = sum_{a in I} Phi(w+a) Phi(w+a)* |w+a|^(2s)``, shape ``(n, r, r)``."""
    Phi = as_vector(Phi)
    I = _index_set(I, Phi.d)
    n = omega.shape[0]
    A = np.zeros((n, Phi.r, Phi.r), complex)
    for a in I:
        x = omega + a
        v = Phi(x) * np.sqrt(_weights(x, s))[:, None]
        A += v[:, :, None] * v[:, None, :].conj()
    return A


def eig_upper_bound(Phi, I, s=0.0, radii=DEFAULT_RADII, directions=None):
    """Upper bound on the order from the extreme eigenvalues of ``A`` on a set I.

    ``I`` lists points of the punctured lattice ``2*pi*Z^d`` (actual
    coordinates, not multiples).  Returns a dict with fits for the smallest
    and largest eigenvalues and ``bound`` = half the zero order of the
    smallest one (``inf`` when there is no bound).
    """
    Phi = as_vector(Phi)
    I = _index_set(I, Phi.d)
    if len(I) == 0:
        return {"rho_min": None, "rho_max": None, "bound": np.inf, "note": "empty index set: no bound"}

    def rho(which):
        def f(w):
            ev = np.linalg.eigvalsh(eig_matrix(Phi, I, w, s))
            out = np.maximum(ev[:, 0 if which == "min" else -1], 0.0)
            # eigenvalues at roundoff level of the largest one are zero
            return np.where(out <= RANK_TOL * np.abs(ev).max(axis=-1), 0.0, out)
        return f

    fmin = radial_fit(rho("min"), Phi.d, radii, directions)
    fmax = radial_fit(rho("max"), Phi.d, radii, directions)
    out = {"rho_min": fmin, "rho_max": fmax, "bound": fmin.exponent / 2.0}
    if len(I) < Phi.r:
        out["note"] = "fewer lattice points than generators: the smallest eigenvalue vanishes identically"
    return out


def superfunction_sample(Phi, s=0.0, cfg=None, radius=0.05, n_radial=6, n_angle=16, threshold=0.1, v=None):
    """Pointwise minimizing vectors near the origin and an exactness certificate.

    Two vectors are reported per sample: the minimizer of the Gramian
    pencil, and the unit eigenvector of the truncated Gramian for its
    smallest eigenvalue.  The certificate holds when
    ``|v_min* Phi|`` stays above ``threshold`` on the whole grid, which pins
    the order to half the zero order of the smallest eigenvalue of the
    truncated Gramian.

    If a trigonometric vector ``v`` is supplied, ``v(0)* Phi(0)`` is also
    checked; a vanishing value sets ``degenerate``.
    """
    Phi = as_vector(Phi)
    d = Phi.d
    cfg = cfg or BracketConfig(s=s)
    dirs = default_directions(d) if d <= 2 else default_directions(d)
    if d == 2:
        th = np.linspace(0, 2 * pi, n_angle, endpoint=False) + pi / n_angle
        dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
    rads = radius * np.linspace(1.0 / n_radial, 1.0, n_radial)
    grid = (rads[:, None, None] * dirs[None]).reshape(-1, d)
    gs = gramian(Phi, grid, s, cfg)
    lam, vmin = pencil_min(gs.G0, gs.b)
    ev, evec = np.linalg.eigh(gs.G0)
    e0 = _fix_phase(evec[:, :, 0])
    phi = Phi(grid)
    abs_pencil = np.abs(np.einsum("ni,ni->n", vmin.conj(), phi))
    abs_eig = np.abs(np.einsum("ni,ni->n", e0.conj(), phi))
    out = {
        "grid": grid,
        "pencil_vectors": vmin,
        "eigen_vectors": e0,
        "pencil_values": lam,
        "inf_abs_pencil": float(abs_pencil.min()),
        "inf_abs_eigen": float(abs_eig.min()),
        "certified": bool(abs_eig.min() > threshold),
        "threshold": threshold,
        "degenerate": False,
    }
    if v is not None:
        v0 = v(np.zeros(d))[..., 0]
        val = complex(np.vdot(v0.ravel(), Phi(np.zeros(d)).ravel()))
        out["v_at_origin_times_phi"] = abs(val)
        out["degenerate"] = bool(abs(val) < 1e-9)
        if out["degenerate"]:
            warnings.warn("the supplied vector gives a superfunction vanishing at the origin",
                          DegenerateWarning, stacklevel=2)
    return out


def refinable_lower_bound(f, rho=pi / 2, M=6, R=8, n_grid=16, lower_tol=1e-8):
    """Fit ``lambda_m = sup_A sum_{a in 2^m (2 pi Z^d \\ 0)} |f(w+a)|^2`` as ``2^(-2mk)``.

    ``A`` is the annulus ``rho/2 < |w| <= rho``.  Returns ``(fit, lambdas)``.

    Raises
    ------
    AnnulusDegenerate
        When ``|f|`` is not bounded away from zero (or is unbounded) on A.
    """
    d = f.d
    if d == 1:
        grid = np.concatenate([np.linspace(rho / 2, rho, n_grid + 1)[1:], -np.linspace(rho / 2, rho, n_grid + 1)[1:]])[:, None]
    else:
        rr = np.linspace(rho / 2, rho, n_grid // 2 + 1)[1:]
        th = np.linspace(0, 2 * pi, 2 * n_grid, endpoint=False)
        grid = (rr[:, None, None] * np.stack([np.cos(th), np.sin(th)], -1)[None]).reshape(-1, 2)
    try:
        fa = np.abs(f(grid))
    except NotAnalytic:
        raise
    if not np.all(np.isfinite(fa)) or fa.min() <= lower_tol:
        raise AnnulusDegenerate("|f| is not bounded away from zero on the annulus")
    base = lattice(d, R)
    lams = []
    for m in range(M + 1):
        pts = grid[:, None, :] + (2 ** m) * base[None]
        vals = np.abs(f(pts.reshape(-1, d))).reshape(grid.shape[0], -1) ** 2
        if not np.all(np.isfinite(vals)):
            raise AnnulusDegenerate("lattice sums are not finite")
        lams.append(float(vals.sum(axis=1).max()))
    lams = np.array(lams)
    if d == 1 and f.decay <= 0.5 or (np.isfinite(f.decay) and 2 * f.decay <= d):
        warnings.warn("symbol is not square summable over the lattice", TailBoundWarning, stacklevel=2)
        raise AnnulusDegenerate("lambda_m sums diverge for a symbol that does not decay")
    radii = 2.0 ** -np.arange(M + 1)
    fit = fit_power_law(radii, lams, n_fit=max(2, (M + 1) // 2))
    return fit, lams


def dual_extend(P, v0, omega, levels):
    """Extend a dual vector inward: ``v*(w) = v*(2w) P(w)``.

    ``v0`` is a callable returning ``(n, r)`` values on the outer annulus;
    the result gives ``v*(w)`` (row vectors, shape ``(n, r)``) at points
    ``omega`` lying in the annulus scaled by ``2^-levels``.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.ndim == 1:
        omega = omega[:, None] if P.d == 1 else omega[None]
    row = np.conj(v0(omega * 2 ** levels))
    for l in range(levels, 0, -1):
        Pw = P(omega * 2 ** (l - 1))
        row = np.einsum("ni,nij->nj", row, Pw)
    return row

"""Quasi-interpolation schemes that reproduce polynomials.

Moments are read off the Taylor jet of the Fourier transform at the origin,
so every generator with a jet at 0 is supported, whether or not it can be
evaluated in space.  Reproduction is verified through the contraction

    psi * q = sum_g m_g d^g q,      m_g = int (-t)^g / g! psi(t) dt,

which is an exact polynomial identity.
"""
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import multiindex as mi
from .errors import DegenerateSymbol, DegenerateWarning, NotExact
from .exact import GaussianRational, is_exact_scalar
from .generators import as_vector
from .polynomial import Polynomial

ZERO_TOL = 1e-12
RESIDUAL_TOL = 1e-10

_I_POW = [GaussianRational(1), GaussianRational(0, -1), GaussianRational(-1), GaussianRational(0, 1)]


def _neg_i_power(n, exact):
    v = _I_POW[n % 4]
    return v if exact else complex(v)


def _zero(c, tol=ZERO_TOL):
    if isinstance(c, GaussianRational):
        return c == 0
    return abs(complex(c)) <= tol


def _symbol_jet(psi, K, exact=True):
    """Jet of ``psi`` at 0, exact when the symbol allows it."""
    z = np.zeros(psi.d)
    if exact:
        try:
            jet = psi.jet(z, K, exact=True)
            if jet.exact:
                return jet
        except NotExact:
            pass
    return psi.jet(z, K, exact=False)


@dataclass
class MomentTable:
    """Moments ``m_g`` of a generator for ``|g| <= order``.

    Attributes
    ----------
    d, order : int
    values : dict
        Multi-index -> moment (GaussianRational in exact mode, else complex).
    scale : scalar
        Value of the transform at 0 that the table was divided by (1 if the
        table is unnormalized).
    """
    d: int
    order: int
    values: dict
    scale: object = 1

    @property
    def exact(self):
        return all(is_exact_scalar(v) for v in self.values.values())

    def __getitem__(self, gamma):
        return self.values.get(tuple(gamma), 0)

    @property
    def m0(self):
        return self.values[mi.zero(self.d)]

    def normalized(self):
        """Moments divided by ``m_0``; raises DegenerateSymbol if it vanishes."""
        m0 = self.m0
        if _zero(m0):
            raise DegenerateSymbol("transform vanishes at the origin")
        if isinstance(m0, GaussianRational) and m0 == 1 or m0 == 1:
            return self
        vals = {g: v / m0 for g, v in self.values.items()}
        return MomentTable(self.d, self.order, vals, m0)

    def to_dict(self):
        return {mi.to_str(g): [float(complex(v).real), float(complex(v).imag)]
                for g, v in sorted(self.values.items(), key=lambda t: (sum(t[0]), t[0]))}


def moments_from_jet(jet, order=None):
    """Moment table from a scalar jet of the transform at the origin."""
    order = jet.degree if order is None else min(order, jet.degree)
    exact = jet.exact
    table = jet.as_dict()
    vals = {}
    for g in mi.graded(jet.d, order):
        vals[g] = _neg_i_power(sum(g), exact) * table[g]
    m0 = vals[mi.zero(jet.d)]
    if _zero(m0):
        warnings.warn("transform vanishes at the origin", DegenerateWarning, stacklevel=2)
    return MomentTable(jet.d, order, vals)


def moments(psi, k, exact=True):
    """Moments ``m_g = (-i)^|g| D^g psi(0)`` for ``|g| <= k``.

    Parameters
    ----------
    psi : FourierSymbol
    k : int
    exact : bool
        Try Gaussian-rational arithmetic first.

    Examples
    --------
    >>> from siapprox.generators import bspline
    >>> moments(bspline(1), 1)[(1,)]
    GaussianRational(-1/2)
    """
    return moments_from_jet(_symbol_jet(psi, k, exact), k)


def convolve_poly(m, q):
    """Continuous convolution ``psi * q`` from the moment table of ``psi``."""
    if q.degree > m.order:
        raise ValueError(f"degree {q.degree} exceeds the moment order {m.order}")
    out = Polynomial(q.d)
    for g, c in m.values.items():
        if _zero(c, 0.0):
            continue
        out = out + q.partial(g) * c
    return out


@dataclass
class QIScheme:
    """Polynomials ``g_a`` with ``psi * g_a = ()^a`` for ``|a| < k``.

    Attributes
    ----------
    k, d : int
    g : dict
        Multi-index -> Polynomial.
    c : dict
        The normalized c-table (equal to the normalized moments).
    scale : scalar
        Transform value at 0 used for normalization.
    provenance : dict
    residuals : dict
        Largest coefficient of ``psi * g_a - ()^a`` per multi-index.
    """
    k: int
    d: int
    g: dict
    c: dict
    scale: object = 1
    provenance: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def max_residual(self):
        return max(self.residuals.values(), default=0.0)

    @property
    def exact(self):
        return all(p.exact for p in self.g.values())

    def verify(self, m):
        """Recompute residuals against the normalized moment table ``m``."""
        self.residuals = {}
        for a, ga in self.g.items():
            diff = convolve_poly(m, ga) - Polynomial.monomial(a)
            self.residuals[a] = diff.max_abs_coeff()
        return self.max_residual

    def to_dict(self):
        return {
            "k": self.k,
            "d": self.d,
            "scale": [float(complex(self.scale).real), float(complex(self.scale).imag)],
            "provenance": self.provenance,
            "exact": self.exact,
            "max_residual": self.max_residual,
            "g": {mi.to_str(a): p.to_json() for a, p in self.g.items()},
            "c": {mi.to_str(a): [float(complex(v).real), float(complex(v).imag)] for a, v in self.c.items()},
            **self.extra,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def recurrence(c, d, k):
    """``g_a = ()^a - sum_{b < a} c(a - b) g_b`` in graded order (needs ``c(0) = 1``)."""
    g = {}
    for a in mi.graded(d, k - 1):
        ga = Polynomial.monomial(a)
        for b in mi.below(a, strict=True):
            cb = c.get(mi.sub(a, b), 0)
            if not _zero(cb, 0.0):
                ga = ga - g[b] * cb
        g[a] = ga
    return g


def _scheme_from_moments(m, k, provenance):
    m = m.normalized()
    c = {a: v for a, v in m.values.items() if sum(a) < k}
    s = QIScheme(k, m.d, recurrence(c, m.d, k), c, m.scale, provenance)
    s.verify(m)
    return s


def qi_from_jet(psi_jet, k, provenance=None):
    """Scheme of order ``k`` from a scalar jet of the transform at 0."""
    if psi_jet.degree < k - 1:
        raise ValueError("jet degree too small for the requested order")
    m = moments_from_jet(psi_jet, k - 1)
    return _scheme_from_moments(m, k, provenance or {"kind": "jet"})


def qi_psi(psi, k, exact=True, check_order=True):
    """Quasi-interpolation scheme for a single generator.

    Parameters
    ----------
    psi : FourierSymbol
    k : int
        Reproduce polynomials of total degree below ``k``.
    exact : bool
    check_order : bool
        Warn when the Strang-Fix order of ``psi`` is below ``k``; the
        recurrence is computed regardless.

    Raises
    ------
    DegenerateSymbol
        If the transform vanishes at the origin.
    """
    k = int(k)
    m = moments(psi, max(k - 1, 0), exact)
    if _zero(m.m0):
        raise DegenerateSymbol("transform vanishes at the origin")
    if not (m.m0 == 1):
        warnings.warn("normalizing the generator so that its transform is 1 at 0", DegenerateWarning,
                      stacklevel=2)
    scheme = _scheme_from_moments(m, k, {"kind": "psi", "generator": repr(psi)})
    if check_order:
        from .ladder import sf_order
        order = sf_order(psi, max_k=k)["order"]
        scheme.extra["sf_order"] = order
        if order < k:
            warnings.warn(f"generator has Strang-Fix order {order} < {k}", DegenerateWarning, stacklevel=2)
    return scheme


def _as_sequence(a, r, d):
    """Normalize coefficient sequences to a list of ``{j: coeff}`` dicts."""
    if isinstance(a, dict):
        a = [a]
    a = list(a)
    if len(a) != r:
        raise ValueError(f"need {r} coefficient sequences, got {len(a)}")
    out = []
    for seq in a:
        if isinstance(seq, str) and seq == "delta":
            seq = {mi.zero(d): 1}
        row = {}
        for j, c in seq.items():
            j = mi.from_str(j) if isinstance(j, str) else tuple(np.atleast_1d(j).astype(int).tolist())
            if len(j) != d:
                raise ValueError(f"bad lattice index {j}")
            row[j] = c
        out.append(row)
    return out


def c_table_fsi(Phi, a, k, exact=True):
    """``c(g) = sum_phi sum_j (phi * ()^g)(j) a_phi(-j)`` for ``|g| < k``."""
    Phi = as_vector(Phi)
    a = _as_sequence(a, Phi.r, Phi.d)
    c = {g: 0 for g in mi.graded(Phi.d, k - 1)}
    for phi, seq in zip(Phi, a):
        m = moments(phi, k - 1, exact)
        for g in c:
            conv = convolve_poly(m, Polynomial.monomial(g))
            for j, coef in seq.items():
                x = tuple(-t for t in j)
                val = conv.eval_exact(x) if conv.exact and is_exact_scalar(coef) else conv(np.array(x, float))
                c[g] = c[g] + val * coef
    return c


def _trig_jet(seq, d, K, exact):
    from .trig import TrigPolyMatrix
    T = TrigPolyMatrix.scalar({j: c for j, c in seq.items()}, d, exact=exact and all(
        is_exact_scalar(c) for c in seq.values()))
    return T.jet_at(np.zeros(d), K, exact=T.exact)


def qi_fsi(Phi, a, k, exact=True):
    """Scheme for ``psi = sum_phi sum_j a_phi(j) phi(. - j)``.

    Parameters
    ----------
    Phi : GeneratorVector or FourierSymbol
    a : list of dict
        One finitely supported sequence ``{j: coeff}`` per generator; the
        string ``"delta"`` stands for the unit impulse at 0.
    k : int

    Returns
    -------
    QIScheme
        ``extra["c_table_mismatch"]`` compares the lattice-sum c-table with
        the moments of the combined generator.
    """
    Phi = as_vector(Phi)
    k = int(k)
    seqs = _as_sequence(a, Phi.r, Phi.d)
    K = max(k - 1, 0)
    psi = None
    for phi, seq in zip(Phi, seqs):
        pj = _symbol_jet(phi, K, exact)
        tj = _trig_jet(seq, Phi.d, K, pj.exact)
        if pj.exact != tj.exact:
            pj, tj = pj.to_complex(), tj.to_complex()
        term = tj[0, 0] * pj
        if psi is not None and psi.exact != term.exact:
            psi, term = psi.to_complex(), term.to_complex()
        psi = term if psi is None else psi + term
    m = moments_from_jet(psi, K)
    if _zero(m.m0):
        raise DegenerateSymbol("the combined generator vanishes at the origin")
    scheme = _scheme_from_moments(m, k, {"kind": "fsi", "generators": Phi.labels,
                                         "sequences": [{mi.to_str(j): str(c) for j, c in s.items()} for s in seqs]})
    c = c_table_fsi(Phi, seqs, k, exact)
    scale = scheme.scale
    scheme.extra["c_table_mismatch"] = max(abs(complex(c[g]) / complex(scale) - complex(scheme.c.get(g, 0)))
                                           for g in c)
    return scheme


def bspline_semidiscrete(k, scheme, points=None):
    """Largest error of ``sum_j B_k(x - j) g_a(j) - ()^a`` at sample points.

    Uses the space-domain B-spline of order ``k`` supported on ``[0, k]``.
    """
    from scipy.interpolate import BSpline
    B = BSpline.basis_element(np.arange(k + 1, dtype=float), extrapolate=False)
    pts = np.linspace(-1.3, 2.7, 5) if points is None else np.asarray(points, float)
    worst = 0.0
    for a, ga in scheme.g.items():
        target = Polynomial.monomial(a)
        for x in pts:
            js = np.arange(np.floor(x) - k - 1, np.ceil(x) + 2)
            vals = np.nan_to_num(B(x - js))
            gj = ga(js.reshape(-1, 1))
            err = abs(np.sum(vals * gj) - target(np.array([x])))
            worst = max(worst, float(err))
    return worst


def qi_bspline(k):
    """Scheme for the B-spline of order ``k`` with the space-domain check attached."""
    from .generators import bspline
    s = qi_psi(bspline(k), k)
    s.extra["semidiscrete_residual"] = bspline_semidiscrete(k, s)
    return s

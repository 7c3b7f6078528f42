"""Truncated Taylor jets in normalized-derivative form.

A jet of degree K at a base point p stores ``D^gamma f(p)`` for all
``|gamma| <= K``, where ``D^gamma = d^gamma / gamma!``.  These are the Taylor
coefficients of ``(w - p)^gamma``, so the Leibniz rule is a plain truncated
Cauchy product.

Coefficients live in the last axis of an array, ordered as
``multiindex.graded(d, K)``; any leading axes are an elementwise "lead"
shape (vector / matrix entries, or a batch of base points).  Object arrays
of ``GaussianRational`` give the exact mode.
"""
from functools import lru_cache

import numpy as np

from . import multiindex as mi
from .errors import DegreeExhausted, NonRemovableSingularity
from .exact import ONE, ZERO, GaussianRational, exact_solve, exact_zeros, to_complex_array, to_exact_array

ZERO_TOL = 1e-9
RESIDUAL_TOL = 1e-7


@lru_cache(maxsize=None)
def _mul_table(d, K):
    idx = mi.graded(d, K)
    pos = mi.position(d, K)
    ia, ib, ic = [], [], []
    for i, a in enumerate(idx):
        da = sum(a)
        for j, b in enumerate(idx):
            if da + sum(b) <= K:
                ia.append(i)
                ib.append(j)
                ic.append(pos[mi.add(a, b)])
    return np.array(ia), np.array(ib), np.array(ic)


@lru_cache(maxsize=None)
def _degree_slices(d, K):
    out = []
    start = 0
    for n in range(K + 1):
        m = len(mi.homogeneous(d, n))
        out.append(slice(start, start + m))
        start += m
    return tuple(out)


@lru_cache(maxsize=None)
def _degree_of_position(d, K):
    return np.array([sum(a) for a in mi.graded(d, K)], dtype=int)


def _degree_from_size(d, n):
    K = 0
    while mi.size(d, K) < n:
        K += 1
    if mi.size(d, K) != n:
        raise ValueError(f"{n} coefficients do not form a full jet in {d} variables")
    return K


def _cauchy(a, b, d, K):
    """Truncated product of coefficient arrays (last axis = graded Z_K)."""
    ia, ib, ic = _mul_table(d, K)
    n = mi.size(d, K)
    lead = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
    if a.dtype == object or b.dtype == object:
        a = np.broadcast_to(a, lead + (n,))
        b = np.broadcast_to(b, lead + (n,))
        out = exact_zeros(lead + (n,))
        nz = [i for i in range(n) if np.any(a[..., i] != 0)]
        nzb = set(i for i in range(n) if np.any(b[..., i] != 0))
        nz = set(nz)
        for i, j, c in zip(ia, ib, ic):
            if i in nz and j in nzb:
                out[..., c] = out[..., c] + a[..., i] * b[..., j]
        return out
    a = np.broadcast_to(a, lead + (n,))
    b = np.broadcast_to(b, lead + (n,))
    prod = a[..., ia] * b[..., ib]
    flat = prod.reshape(-1, len(ia))
    m = flat.shape[0]
    if m == 1:
        out = np.zeros(n, dtype=complex)
        np.add.at(out, ic, flat[0])
        return out.reshape(lead + (n,))
    offs = (np.arange(m)[:, None] * n + ic[None, :]).ravel()
    re = np.bincount(offs, weights=flat.real.ravel(), minlength=m * n)
    im = np.bincount(offs, weights=flat.imag.ravel(), minlength=m * n)
    return (re + 1j * im).reshape(lead + (n,))


class TaylorJet:
    """Degree-K jet of an analytic function (possibly array valued).

    Parameters
    ----------
    coeffs : array_like
        Shape ``lead + (|Z_K|,)``; complex, or object for exact mode.
    base : array_like
        Base point, shape ``(d,)`` or ``batch + (d,)``.
    degree : int, optional
        Inferred from the last axis when omitted.
    """

    __array_priority__ = 1000

    def __init__(self, coeffs, base, degree=None):
        base = np.asarray(base, dtype=float)
        if base.ndim == 0:
            base = base.reshape(1)
        self.base = base
        self.d = base.shape[-1]
        coeffs = np.asarray(coeffs)
        if coeffs.dtype != object:
            coeffs = coeffs.astype(complex, copy=False)
        if degree is None:
            degree = _degree_from_size(self.d, coeffs.shape[-1])
        elif coeffs.shape[-1] != mi.size(self.d, degree):
            raise ValueError("coefficient axis does not match the degree")
        self.degree = int(degree)
        self.coeffs = coeffs

    # construction -----------------------------------------------------
    @classmethod
    def constant(cls, value, base, degree, exact=False):
        base = np.asarray(base, dtype=float)
        d = base.shape[-1]
        n = mi.size(d, degree)
        batch = base.shape[:-1]
        if exact:
            c = exact_zeros(batch + (n,))
            c[..., 0] = GaussianRational.coerce(value)
        else:
            c = np.zeros(batch + (n,), dtype=complex)
            c[..., 0] = value
        return cls(c, base, degree)

    @classmethod
    def variable(cls, j, base, degree, exact=False):
        """Jet of the coordinate w_j."""
        base = np.asarray(base, dtype=float)
        d = base.shape[-1]
        jet = cls.constant(0, base, degree, exact)
        if exact:
            if np.any(base[..., j] != 0):
                from .errors import NotExact
                raise NotExact("coordinate value at base is not rational")
            if degree >= 1:
                jet.coeffs[..., mi.position(d, degree)[mi.unit(d, j)]] = ONE
        else:
            jet.coeffs[..., 0] = base[..., j]
            if degree >= 1:
                jet.coeffs[..., mi.position(d, degree)[mi.unit(d, j)]] = 1.0
        return jet

    @classmethod
    def from_dict(cls, table, base, degree, exact=False):
        base = np.asarray(base, dtype=float)
        d = base.shape[-1]
        jet = cls.constant(0, base, degree, exact)
        pos = mi.position(d, degree)
        for alpha, c in table.items():
            alpha = tuple(alpha)
            if sum(alpha) <= degree:
                jet.coeffs[..., pos[alpha]] = GaussianRational.coerce(c) if exact else c
        return jet

    # basic properties -------------------------------------------------
    @property
    def exact(self):
        return self.coeffs.dtype == object

    @property
    def lead_shape(self):
        return self.coeffs.shape[:-1]

    @property
    def indices(self):
        return mi.graded(self.d, self.degree)

    def coeff(self, alpha):
        return self.coeffs[..., mi.position(self.d, self.degree)[tuple(alpha)]]

    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        return TaylorJet(self.coeffs[key], self.base, self.degree)

    def as_dict(self):
        if self.lead_shape:
            raise ValueError("as_dict needs a scalar jet")
        return {a: self.coeffs[i] for i, a in enumerate(self.indices)}

    def to_complex(self):
        return TaylorJet(to_complex_array(self.coeffs), self.base, self.degree)

    def to_exact(self):
        return TaylorJet(to_exact_array(self.coeffs), self.base, self.degree)

    def truncate(self, K):
        if K > self.degree:
            raise ValueError("cannot raise the degree of a jet")
        return TaylorJet(self.coeffs[..., : mi.size(self.d, K)], self.base, K)

    def homogeneous_part(self, n):
        return self.coeffs[..., _degree_slices(self.d, self.degree)[n]]

    def with_base(self, base):
        return TaylorJet(self.coeffs, base, self.degree)

    # zero order ------------------------------------------------------
    def zero_mask(self, tol=ZERO_TOL):
        """Boolean array: which coefficients count as zero."""
        if self.exact:
            return np.vectorize(lambda c: not c, otypes=[bool])(self.coeffs) if self.coeffs.size else np.zeros(self.coeffs.shape, bool)
        a = np.abs(self.coeffs)
        scale = np.maximum(1.0, a.max(axis=-1, keepdims=True)) if a.size else 1.0
        return a <= tol * scale

    def zero_orders(self, tol=ZERO_TOL):
        """Per-entry zero order (K+1 when everything vanishes)."""
        z = self.zero_mask(tol)
        degs = _degree_of_position(self.d, self.degree)
        nonzero = ~z
        big = self.degree + 1
        cand = np.where(nonzero, degs, big)
        return cand.min(axis=-1) if cand.shape[-1] else np.full(cand.shape[:-1], big)

    def zero_order(self, tol=ZERO_TOL):
        """Zero order of the whole (vector/matrix) jet, min over entries."""
        o = self.zero_orders(tol)
        return int(np.min(o)) if np.ndim(o) else int(o)

    # arithmetic ------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, TaylorJet):
            if other.d != self.d:
                raise ValueError("jets live in different dimensions")
            if self.base.ndim == 1 and other.base.ndim == 1 and not np.allclose(self.base, other.base, atol=1e-12, rtol=1e-12):
                raise ValueError("jets have different base points")
            return other
        return None

    def _align(self, other):
        K = min(self.degree, other.degree)
        a = self.truncate(K).coeffs
        b = other.truncate(K).coeffs
        if (a.dtype == object) != (b.dtype == object):
            a, b = to_complex_array(a), to_complex_array(b)
        base = self.base if self.base.ndim >= other.base.ndim else other.base
        return a, b, K, base

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            c = self.coeffs.copy()
            c[..., 0] = c[..., 0] + (GaussianRational.coerce(other) if self.exact else other)
            return TaylorJet(c, self.base, self.degree)
        a, b, K, base = self._align(o)
        return TaylorJet(a + b, base, K)

    __radd__ = __add__

    def __neg__(self):
        return TaylorJet(-self.coeffs, self.base, self.degree)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            if self.exact:
                other = GaussianRational.coerce(other)
            elif isinstance(other, np.ndarray):
                return TaylorJet(self.coeffs * other[..., None], self.base, self.degree)
            return TaylorJet(self.coeffs * other, self.base, self.degree)
        return jet_mul(self, o)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            if self.exact:
                return TaylorJet(self.coeffs * (ONE / GaussianRational.coerce(other)), self.base, self.degree)
            return self * (1.0 / other)
        return jet_div(self, o)

    def __rtruediv__(self, other):
        return jet_div(TaylorJet.constant(other, self.base, self.degree, self.exact), self)

    def __pow__(self, n):
        if int(n) != n or n < 0:
            raise ValueError("jet powers must be nonnegative integers")
        out = TaylorJet.constant(1, self.base, self.degree, self.exact)
        if self.lead_shape:
            out = TaylorJet(np.broadcast_to(out.coeffs, self.coeffs.shape).copy(), self.base, self.degree)
        base = self
        n = int(n)
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def conj_coeffs(self):
        """Jet with conjugated coefficients (jet of conj(f(conj w)))."""
        if self.exact:
            return TaylorJet(np.vectorize(lambda c: c.conjugate(), otypes=[object])(self.coeffs), self.base, self.degree)
        return TaylorJet(np.conj(self.coeffs), self.base, self.degree)

    # evaluation and substitution -----------------------------------------
    def evaluate(self, offset):
        """Taylor polynomial at base + offset; offset shape ``(..., d)``."""
        offset = np.asarray(offset, dtype=float)
        E = mi.exponent_array(self.d, self.degree)
        mon = np.prod(offset[..., None, :] ** E, axis=-1)
        c = to_complex_array(self.coeffs)
        return np.sum(c * mon, axis=-1)

    def scale_variables(self, c):
        """Jet of f(base' + c*delta) given this jet of f at base'."""
        E = mi.exponent_array(self.d, self.degree)
        c = np.broadcast_to(np.asarray(c if not isinstance(c, (int, float)) else [c] * self.d, dtype=object if self.exact else float), (self.d,))
        if self.exact:
            from fractions import Fraction
            cc = [Fraction(x) for x in c]
            fac = np.array([np.prod([cc[t] ** int(e[t]) for t in range(self.d)]) for e in E], dtype=object)
            fac = np.array([GaussianRational.coerce(x) for x in fac], dtype=object)
        else:
            fac = np.prod(c.astype(float)[None, :] ** E, axis=-1)
        return TaylorJet(self.coeffs * fac, self.base, self.degree)

    def permute_variables(self, perm):
        """Jet of f(delta[perm]) ... i.e. new variable t receives old variable perm[t]."""
        idx = mi.graded(self.d, self.degree)
        pos = mi.position(self.d, self.degree)
        # g(delta) = f(eta) with eta_t = delta_{perm[t]}; coefficient of delta^beta
        # equals coefficient of eta^alpha where beta_{perm[t]} = alpha_t
        src = np.empty(len(idx), dtype=int)
        for i, beta in enumerate(idx):
            alpha = tuple(beta[perm[t]] for t in range(self.d))
            src[i] = pos[alpha]
        return TaylorJet(self.coeffs[..., src], self.base, self.degree)

    def compose_linear(self, M):
        """Jet in delta of f(q + M delta), given this jet of f at q."""
        M = np.asarray(M)
        d = self.d
        K = self.degree
        exact = self.exact
        zero_base = np.zeros(d)
        lin = []
        for t in range(d):
            c = exact_zeros(mi.size(d, K)) if exact else np.zeros(mi.size(d, K), dtype=complex)
            if K >= 1:
                for k in range(d):
                    val = M[t, k]
                    c[mi.position(d, K)[mi.unit(d, k)]] = GaussianRational.coerce(val) if exact else val
            lin.append(TaylorJet(c, zero_base, K))
        # powers cache
        pows = [[TaylorJet.constant(1, zero_base, K, exact)] for _ in range(d)]
        for t in range(d):
            for e in range(1, K + 1):
                pows[t].append(pows[t][-1] * lin[t])
        out = np.zeros(self.coeffs.shape, dtype=object if exact else complex)
        if exact:
            out.fill(ZERO)
        for i, alpha in enumerate(self.indices):
            term = pows[0][alpha[0]]
            for t in range(1, d):
                term = term * pows[t][alpha[t]]
            out = out + self.coeffs[..., i:i + 1] * term.coeffs
        return TaylorJet(out, self.base, K)

    def __repr__(self):
        return f"TaylorJet(d={self.d}, degree={self.degree}, lead={self.lead_shape}, exact={self.exact})"


def jet_mul(a, b):
    """Leibniz product of two jets; degree is the smaller of the two."""
    o = a._coerce(b)
    if o is None:
        raise TypeError("jet_mul expects two jets")
    x, y, K, base = a._align(o)
    return TaylorJet(_cauchy(x, y, a.d, K), base, K)


def jet_matmul(a, b):
    """Matrix product of jets with lead shapes (r, c) and (c, q) or (c,)."""
    vec = len(b.lead_shape) == 1
    x, y, K, base = a._align(b)
    if vec:
        y = y[:, None, :]
    prod = _cauchy(x[:, :, None, :], y[None, :, :, :], a.d, K)
    out = prod.sum(axis=1)
    if vec:
        out = out[:, 0, :]
    return TaylorJet(out, base, K)


def _homog_mult_matrix(hm, d, m, n):
    """Matrix of multiplication by homogeneous hm (degree m) from degree n-m to n."""
    src = mi.homogeneous(d, n - m)
    dst = {a: i for i, a in enumerate(mi.homogeneous(d, n))}
    gam = mi.homogeneous(d, m)
    lead = hm.shape[:-1]
    if hm.dtype == object:
        M = exact_zeros(lead + (len(dst), len(src)))
    else:
        M = np.zeros(lead + (len(dst), len(src)), dtype=complex)
    for gi, g in enumerate(gam):
        for si, s in enumerate(src):
            M[..., dst[mi.add(g, s)], si] = M[..., dst[mi.add(g, s)], si] + hm[..., gi]
    return M


def jet_div(num, den, order=None):
    """Quotient jet after cancelling the common zero of ``den``.

    The result has degree ``K - zero_order(den)``.  In floating mode every
    entry of ``den`` must share one zero order (group batches beforehand).
    Pass ``order`` when the zero order is known structurally; tiny leading
    coefficients are then kept instead of being rounded to zero.
    """
    o = num._coerce(den)
    if o is None:
        raise TypeError("jet_div expects two jets")
    a, b, K, base = num._align(o)
    d = num.d
    N = TaylorJet(a, base, K)
    D = TaylorJet(b, base, K)
    m_all = np.atleast_1d(D.zero_orders()) if order is None else np.atleast_1d(int(order))
    if np.any(m_all > K):
        raise DegreeExhausted("denominator vanishes to the full degree of the jet")
    m = int(m_all.min())
    if np.any(m_all != m):
        raise ValueError("denominator zero orders differ across the batch; group first")
    if order is None and np.any(np.atleast_1d(N.zero_orders()) < m):
        raise NonRemovableSingularity(
            f"numerator vanishes to lower order than the denominator ({m})")
    exact = N.exact
    lead = np.broadcast_shapes(N.lead_shape, D.lead_shape)
    Kq = K - m
    nq = mi.size(d, Kq)
    nK = mi.size(d, K)
    q_full = exact_zeros(lead + (nK,)) if exact else np.zeros(lead + (nK,), dtype=complex)
    slices = _degree_slices(d, K)
    hm = np.broadcast_to(D.coeffs[..., slices[m]], lead + (slices[m].stop - slices[m].start,))
    num_c = np.broadcast_to(N.coeffs, lead + (nK,))
    scale = None
    if not exact:
        scale = np.maximum(1.0, np.abs(num_c).max(axis=-1))
    for n in range(m, K + 1):
        if n == m:
            r = num_c[..., slices[n]]
        else:
            prod = _cauchy(q_full, D.coeffs, d, K)
            r = num_c[..., slices[n]] - prod[..., slices[n]]
        dst = slices[n - m]
        if d == 1:
            if exact:
                t = np.array([x / y for x, y in zip(r.ravel(), hm.ravel())], dtype=object).reshape(r.shape)
            else:
                t = r / hm
        else:
            M = _homog_mult_matrix(hm, d, m, n)
            if exact:
                flatM = M.reshape((-1,) + M.shape[-2:])
                flatr = r.reshape(-1, r.shape[-1])
                sol = []
                for Mi, ri in zip(flatM, flatr):
                    x = exact_solve(Mi, ri)
                    if x is None:
                        raise NonRemovableSingularity("quotient is not analytic at the base point")
                    sol.append(x)
                t = np.array(sol, dtype=object).reshape(r.shape[:-1] + (M.shape[-1],))
            else:
                t = np.einsum("...ij,...j->...i", np.linalg.pinv(M), r)
                res = np.abs(np.einsum("...ij,...j->...i", M, t) - r).max(axis=-1)
                if np.any(res > RESIDUAL_TOL * scale):
                    raise NonRemovableSingularity("quotient is not analytic at the base point")
        q_full[..., dst] = t
    return TaylorJet(q_full[..., :nq], base, Kq)


def taylor_shift(coeffs, d, K_src, q, K_dst):
    """Re-expand ``sum_b c_b delta^b`` (degree K_src) about the point q."""
    src = mi.graded(d, K_src)
    dst = mi.graded(d, K_dst)
    q = np.asarray(q, dtype=float)
    T = np.zeros((len(src), len(dst)))
    for j, a in enumerate(dst):
        for i, b in enumerate(src):
            if mi.leq(a, b):
                e = mi.sub(b, a)
                T[i, j] = mi.binomial(b, a) * float(np.prod(q ** np.array(e)))
    return coeffs @ T

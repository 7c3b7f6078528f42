"""Fourier symbols of compactly supported generators as expression trees.

Every node evaluates pointwise (vectorized over ``(..., d)`` arrays) and
returns Taylor jets at any base point.  Quotients evaluate through jets
near the hyperplanes where their denominators vanish, so removable
singularities never cost digits.

Each node also carries ``decay``: an exponent ``m`` with
``|f(w)| <= C (1 + |w|)^(-m)``, used to bound lattice-sum tails.
"""
from fractions import Fraction
from math import factorial, pi

import numpy as np

from . import multiindex as mi
from .errors import NonRemovableSingularity, NotAnalytic, NotExact
from .exact import GaussianRational, is_exact_scalar
from .jet import TaylorJet, jet_div, taylor_shift

NEAR_SINGULAR = 1e-3
REROUTE_DEGREE = 6
_ON_PLANE = 1e-12


def _points(omega, d):
    w = np.asarray(omega, dtype=float)
    if d == 1 and (w.ndim == 0 or w.shape[-1] != 1):
        w = w[..., None]
    if w.shape[-1] != d:
        raise ValueError(f"expected points with {d} coordinates, got shape {w.shape}")
    return w


def _exact_number(x):
    """Fraction for exactly representable reals (ints and dyadic floats)."""
    if isinstance(x, (int, np.integer, Fraction)):
        return Fraction(x)
    f = Fraction(float(x))
    if f.denominator <= 2 ** 20:
        return f
    raise NotExact(f"{x} is not a short rational")


def _quarter(x, tol=1e-9):
    q = np.asarray(x) / (pi / 2)
    n = np.rint(q)
    return n.astype(int) if np.all(np.abs(q - n) <= tol) else None


_PHASE = {0: GaussianRational(1), 1: GaussianRational(0, -1), 2: GaussianRational(-1), 3: GaussianRational(0, 1)}


class FourierSymbol:
    """Base node.  Subclasses implement ``_eval`` and ``_jet``."""

    d = 1
    _decay = None

    # public API ---------------------------------------------------------
    def __call__(self, omega):
        w = _points(omega, self.d)
        lead = w.shape[:-1]
        return self._eval(w.reshape(-1, self.d)).reshape(lead)

    def jet(self, p, K, exact=False):
        """Degree-K jet at ``p`` (shape ``(d,)`` or ``(n, d)`` batch)."""
        p = _points(p, self.d)
        single = p.ndim == 1
        pts = p.reshape(-1, self.d)
        j = self._jet(pts, int(K), bool(exact))
        if single:
            return TaylorJet(j.coeffs[0], p, K)
        return j

    def zero_order_at(self, p, K):
        """Order of the zero at ``p`` (K+1 means "vanishes beyond degree K")."""
        p = np.asarray(_points(p, self.d), dtype=float).reshape(self.d)
        return min(self._order(p, int(K)), K + 1)

    def linear_zeros(self):
        """Hyperplanes ``a.w = c`` (with multiplicity) where this factor vanishes."""
        return []

    @property
    def decay(self):
        return self._decay if self._decay is not None else self._structural_decay()

    def with_decay(self, m):
        """Same symbol with an explicitly asserted decay exponent."""
        out = _Decorated(self, m)
        return out

    def _structural_decay(self):
        return 0.0

    # fallbacks -------------------------------------------------------------
    def _order(self, p, K):
        try:
            j = self.jet(p, K, exact=True)
        except NotExact:
            j = self.jet(p, K, exact=False)
        return j.zero_order()

    # operators ------------------------------------------------------------
    def __add__(self, other):
        return Sum([self, as_symbol(other, self.d)])

    __radd__ = __add__

    def __sub__(self, other):
        return Sum([self, Scale(-1, as_symbol(other, self.d))])

    def __rsub__(self, other):
        return Sum([as_symbol(other, self.d), Scale(-1, self)])

    def __neg__(self):
        return Scale(-1, self)

    def __mul__(self, other):
        if isinstance(other, FourierSymbol):
            return Product([self, other])
        return Scale(other, self)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, FourierSymbol):
            return Quotient(self, other)
        return Scale(1 / Fraction(other) if is_exact_scalar(other) else 1 / other, self)

    def __pow__(self, n):
        return Power(self, n)


def as_symbol(x, d):
    if isinstance(x, FourierSymbol):
        if x.d != d:
            raise ValueError("symbols live in different dimensions")
        return x
    return Constant(x, d)


def _const_coeff(c, exact):
    return GaussianRational.coerce(c) if exact else complex(c)


class _Decorated(FourierSymbol):
    def __init__(self, child, m):
        self.child, self.d, self._decay = child, child.d, float(m)

    def _eval(self, w):
        return self.child._eval(w)

    def _jet(self, p, K, exact):
        return self.child._jet(p, K, exact)

    def _order(self, p, K):
        return self.child._order(p, K)

    def linear_zeros(self):
        return self.child.linear_zeros()

    def __getattr__(self, name):
        if name == "child":
            raise AttributeError(name)
        return getattr(self.child, name)

    def __repr__(self):
        return repr(self.child)


class Constant(FourierSymbol):
    def __init__(self, c, d=1):
        self.c, self.d = c, int(d)

    def _eval(self, w):
        return np.full(w.shape[0], complex(self.c))

    def _jet(self, p, K, exact):
        return TaylorJet.constant(self.c, p, K, exact)

    def _order(self, p, K):
        return 0 if self.c != 0 else K + 1

    def _structural_decay(self):
        return 0.0 if self.c != 0 else np.inf

    def __repr__(self):
        return f"{self.c}"


class Coordinate(FourierSymbol):
    """The coordinate function ``w_j``."""

    def __init__(self, j, d=1):
        self.j, self.d = int(j), int(d)

    def _eval(self, w):
        return w[:, self.j].astype(complex)

    def _jet(self, p, K, exact):
        return TaylorJet.variable(self.j, p, K, exact)

    def _order(self, p, K):
        return 0 if p[self.j] != 0 else 1

    def linear_zeros(self):
        a = np.zeros(self.d)
        a[self.j] = 1.0
        return [(a, 0.0, 1)]

    def _structural_decay(self):
        return -1.0

    def __repr__(self):
        return f"w{self.j}"


class Affine(FourierSymbol):
    """``a.w + c``."""

    def __init__(self, a, c=0.0):
        self.a = np.atleast_1d(np.asarray(a, dtype=float))
        self.c = float(c)
        self.d = len(self.a)

    def _eval(self, w):
        return (w @ self.a + self.c).astype(complex)

    def _jet(self, p, K, exact):
        val = p @ self.a + self.c
        n = mi.size(self.d, K)
        pos = mi.position(self.d, K)
        if exact:
            if np.any(np.abs(val) > _ON_PLANE * (1 + np.abs(p).max())):
                raise NotExact("affine value at base point is not rational")
            jet = TaylorJet.constant(0, p, K, True)
            if K >= 1:
                for t in range(self.d):
                    jet.coeffs[:, pos[mi.unit(self.d, t)]] = GaussianRational.coerce(_exact_number(self.a[t]))
            return jet
        c = np.zeros((p.shape[0], n), complex)
        c[:, 0] = val
        if K >= 1:
            for t in range(self.d):
                c[:, pos[mi.unit(self.d, t)]] = self.a[t]
        return TaylorJet(c, p, K)

    def _order(self, p, K):
        if not np.any(self.a):
            return 0 if self.c != 0 else K + 1
        v = p @ self.a + self.c
        return 1 if abs(v) <= _ON_PLANE * (1 + np.abs(p).max()) else 0

    def linear_zeros(self):
        return [(self.a.copy(), -self.c, 1)] if np.any(self.a) else []

    def _structural_decay(self):
        return -1.0

    def __repr__(self):
        return f"({self.a}.w + {self.c})"


class Exponential(FourierSymbol):
    """``exp(-i a.w)``: the symbol of a shift by ``a``."""

    def __init__(self, a):
        self.a = np.atleast_1d(np.asarray(a, dtype=float))
        self.d = len(self.a)

    def _eval(self, w):
        return np.exp(-1j * (w @ self.a))

    def _jet(self, p, K, exact):
        E = mi.exponent_array(self.d, K)
        if exact:
            q = _quarter(p @ self.a)
            if q is None:
                raise NotExact("exponential phase is not a quarter turn")
            a = [_exact_number(x) for x in self.a]
            mono = np.empty(len(E), dtype=object)
            for i, g in enumerate(E):
                v = GaussianRational(1)
                for at, gt in zip(a, g):
                    v = v * GaussianRational(0, -at) ** int(gt)
                mono[i] = v / mi.factorial(tuple(g))
            out = np.empty((p.shape[0], len(E)), dtype=object)
            for b in range(p.shape[0]):
                ph = _PHASE[int(np.atleast_1d(q)[b]) % 4]
                out[b] = mono * ph
            return TaylorJet(out, p, K)
        fact = np.array([mi.factorial(tuple(g)) for g in E], dtype=float)
        mono = np.prod((-1j * self.a) ** E, axis=-1) / fact
        ph = np.exp(-1j * (p @ self.a))
        return TaylorJet(ph[:, None] * mono[None, :], p, K)

    def _order(self, p, K):
        return 0

    def __repr__(self):
        return f"exp(-i {self.a}.w)"


class Sum(FourierSymbol):
    def __init__(self, terms):
        flat = []
        for t in terms:
            flat.extend(t.terms if isinstance(t, Sum) and t._decay is None else [t])
        self.terms = flat
        self.d = flat[0].d
        if any(t.d != self.d for t in flat):
            raise ValueError("dimension mismatch in sum")

    def _eval(self, w):
        out = self.terms[0]._eval(w)
        for t in self.terms[1:]:
            out = out + t._eval(w)
        return out

    def _jet(self, p, K, exact):
        out = self.terms[0]._jet(p, K, exact)
        for t in self.terms[1:]:
            out = out + t._jet(p, K, exact)
        return out

    def _structural_decay(self):
        return min(t.decay for t in self.terms)

    def __repr__(self):
        return "(" + " + ".join(map(repr, self.terms)) + ")"


class Product(FourierSymbol):
    def __init__(self, factors):
        flat = []
        for f in factors:
            flat.extend(f.factors if isinstance(f, Product) and f._decay is None else [f])
        self.factors = flat
        self.d = flat[0].d
        if any(f.d != self.d for f in flat):
            raise ValueError("dimension mismatch in product")

    def _eval(self, w):
        out = self.factors[0]._eval(w)
        for f in self.factors[1:]:
            out = out * f._eval(w)
        return out

    def _jet(self, p, K, exact):
        out = self.factors[0]._jet(p, K, exact)
        for f in self.factors[1:]:
            out = out * f._jet(p, K, exact)
        return out

    def _order(self, p, K):
        total = 0
        for f in self.factors:
            total += f._order(p, K)
            if total > K:
                return K + 1
        return total

    def linear_zeros(self):
        out = []
        for f in self.factors:
            out.extend(f.linear_zeros())
        return _merge_planes(out)

    def _structural_decay(self):
        return sum(f.decay for f in self.factors)

    def __repr__(self):
        return "*".join(map(repr, self.factors))


class Power(FourierSymbol):
    def __init__(self, base, n):
        if int(n) != n or n < 0:
            raise ValueError("only nonnegative integer powers are supported")
        self.base, self.n, self.d = base, int(n), base.d

    def _eval(self, w):
        return self.base._eval(w) ** self.n

    def _jet(self, p, K, exact):
        return self.base._jet(p, K, exact) ** self.n

    def _order(self, p, K):
        return min(self.n * self.base._order(p, K), K + 1) if self.n else 0

    def linear_zeros(self):
        return [(a, c, m * self.n) for a, c, m in self.base.linear_zeros()] if self.n else []

    def _structural_decay(self):
        return self.n * self.base.decay

    def __repr__(self):
        return f"({self.base!r})^{self.n}"


class Scale(FourierSymbol):
    def __init__(self, c, child):
        self.c, self.child, self.d = c, child, child.d

    def _eval(self, w):
        return complex(self.c) * self.child._eval(w)

    def _jet(self, p, K, exact):
        return self.child._jet(p, K, exact) * _const_coeff(self.c, exact)

    def _order(self, p, K):
        return self.child._order(p, K) if self.c != 0 else K + 1

    def linear_zeros(self):
        return self.child.linear_zeros()

    def _structural_decay(self):
        return self.child.decay

    def __repr__(self):
        return f"{self.c}*{self.child!r}"


class Dilation(FourierSymbol):
    """``child(M w)`` for a scalar or an invertible matrix ``M``."""

    def __init__(self, M, child):
        self.child, self.d = child, child.d
        M = np.asarray(M, dtype=float)
        self.M = M * np.eye(self.d) if M.ndim == 0 else M

    def _eval(self, w):
        return self.child._eval(w @ self.M.T)

    def _jet(self, p, K, exact):
        j = self.child._jet(p @ self.M.T, K, exact)
        if exact:
            M = np.array([[_exact_number(x) for x in row] for row in self.M], dtype=object)
            return j.compose_linear(M).with_base(p)
        return j.compose_linear(self.M).with_base(p)

    def _order(self, p, K):
        return self.child._order(self.M @ p, K)

    def linear_zeros(self):
        return [(self.M.T @ a, c, m) for a, c, m in self.child.linear_zeros()]

    def _structural_decay(self):
        return self.child.decay

    def __repr__(self):
        return f"{self.child!r}(M w)"


class Modulation(FourierSymbol):
    """``child(w - b)``: the Fourier image of multiplying by ``exp(i b.x)``."""

    def __init__(self, b, child):
        self.child, self.d = child, child.d
        self.b = np.atleast_1d(np.asarray(b, dtype=float))

    def _eval(self, w):
        return self.child._eval(w - self.b)

    def _jet(self, p, K, exact):
        return self.child._jet(p - self.b, K, exact).with_base(p)

    def _order(self, p, K):
        return self.child._order(p - self.b, K)

    def linear_zeros(self):
        return [(a, c + a @ self.b, m) for a, c, m in self.child.linear_zeros()]

    def _structural_decay(self):
        return self.child.decay

    def __repr__(self):
        return f"{self.child!r}(w - {self.b})"


class Quotient(FourierSymbol):
    """``num / den`` with removable singularities resolved through jets."""

    def __init__(self, num, den):
        if num.d != den.d:
            raise ValueError("dimension mismatch in quotient")
        self.num, self.den, self.d = num, den, num.d
        self._planes = _merge_planes(den.linear_zeros())

    def _den_orders(self, p, K):
        return np.array([self.den._order(q, K) for q in p], dtype=int)

    def _jet(self, p, K, exact):
        n = mi.size(self.d, K)
        out = np.empty((p.shape[0], n), dtype=object if exact else complex)
        todo = np.arange(p.shape[0])
        if not exact and self._planes:
            # near a singular plane but off it: expand at the projection and shift back
            ids, pstar, mult = self._project(p)
            off = np.linalg.norm(p[ids] - pstar, axis=1) > 0 if len(ids) else np.zeros(0, bool)
            ids, pstar, mult = ids[off], pstar[off], mult[off]
            for mv in np.unique(mult):
                sub = np.nonzero(mult == mv)[0]
                Kb = K + REROUTE_DEGREE
                q = jet_div(self.num._jet(pstar[sub], Kb + int(mv), False),
                            self.den._jet(pstar[sub], Kb + int(mv), False), order=int(mv))
                for t, i in enumerate(ids[sub]):
                    out[i] = taylor_shift(q.coeffs[t], self.d, Kb, p[i] - pstar[sub][t], K)
            todo = np.setdiff1d(todo, ids)
        if len(todo):
            q = p[todo]
            m = self._den_orders(q, K + 64)
            for mv in np.unique(m):
                idx = np.nonzero(m == mv)[0]
                num = self.num._jet(q[idx], K + int(mv), exact)
                den = self.den._jet(q[idx], K + int(mv), exact)
                out[todo[idx]] = jet_div(num, den).coeffs
        return TaylorJet(out, p, K)

    def _project(self, w):
        """Points within NEAR_SINGULAR of a singular plane, their projections and multiplicities."""
        planes = self._planes
        A = np.array([a for a, _, _ in planes])
        c = np.array([cc for _, cc, _ in planes])
        mult = np.array([m for _, _, m in planes])
        norms = np.linalg.norm(A, axis=1)
        near = np.abs(w @ A.T - c) / norms < NEAR_SINGULAR
        ids = np.nonzero(near.any(axis=1))[0]
        pstar = np.empty((len(ids), w.shape[1]))
        m = np.empty(len(ids), dtype=int)
        for t, i in enumerate(ids):
            sel = near[i]
            As, cs = A[sel], c[sel]
            x = w[i]
            ps = x - (x @ As.T - cs) @ np.linalg.pinv(As).T
            on = np.abs(ps @ A.T - c) / norms <= _ON_PLANE * (1 + np.abs(ps).max())
            pstar[t], m[t] = ps, int((on * mult).sum())
        return ids, pstar, m

    def _order(self, p, K):
        dn = self.den._order(p, K + 64)
        nn = self.num._order(p, K + dn)
        if nn < dn:
            raise NonRemovableSingularity(f"pole of order {dn - nn} at {p}")
        return nn - dn

    def _eval(self, w):
        planes = self._planes
        if not planes:
            return self.num._eval(w) / self.den._eval(w)
        A = np.array([a for a, _, _ in planes])
        c = np.array([cc for _, cc, _ in planes])
        mult = np.array([m for _, _, m in planes])
        norms = np.linalg.norm(A, axis=1)
        dist = np.abs(w @ A.T - c) / norms
        near = dist < NEAR_SINGULAR
        far = ~near.any(axis=1)
        out = np.empty(w.shape[0], dtype=complex)
        if far.any():
            out[far] = self.num._eval(w[far]) / self.den._eval(w[far])
        idx_near = np.nonzero(~far)[0]
        if idx_near.size == 0:
            return out
        patterns = {}
        for i in idx_near:
            patterns.setdefault(tuple(near[i]), []).append(i)
        for pat, ids in patterns.items():
            ids = np.array(ids)
            sel = np.array(pat)
            As, cs = A[sel], c[sel]
            x = w[ids]
            # project onto the intersection of the nearby hyperplanes
            corr = (x @ As.T - cs) @ np.linalg.pinv(As).T
            pstar = x - corr
            on = np.abs(pstar @ A.T - c) / norms <= _ON_PLANE * (1 + np.abs(pstar).max())
            m = (on * mult).sum(axis=1)
            for mv in np.unique(m):
                sub = np.nonzero(m == mv)[0]
                ps = pstar[sub]
                K = REROUTE_DEGREE + int(mv)
                q = jet_div(self.num._jet(ps, K, False), self.den._jet(ps, K, False), order=int(mv))
                out[ids[sub]] = q.evaluate(x[sub] - ps)
        return out

    def linear_zeros(self):
        return []

    def _structural_decay(self):
        return self.num.decay - self.den.decay

    def __repr__(self):
        return f"({self.num!r})/({self.den!r})"


class TrigSymbol(FourierSymbol):
    """A scalar trigonometric polynomial viewed as a symbol."""

    def __init__(self, tp):
        if tp.shape != (1, 1):
            raise ValueError("TrigSymbol wraps a scalar trigonometric polynomial")
        self.tp, self.d = tp, tp.d

    def _eval(self, w):
        return self.tp(w)[..., 0, 0]

    def _jet(self, p, K, exact):
        j = self.tp.jet_at(p, K, exact=exact)
        return TaylorJet(j.coeffs[:, 0, 0, :], p, K)

    def __repr__(self):
        return f"trig[{len(self.tp.coeffs)} terms]"


class Bump(FourierSymbol):
    """Smooth profile ``exp(-1 / (1 - |w/rho|^2))`` supported in ``|w| < rho``.

    Not analytic, so jets are unavailable.  Used as a band-limited test
    function in error measurements.
    """

    def __init__(self, rho, d=1):
        self.rho, self.d = float(rho), int(d)
        self._decay = np.inf

    def _eval(self, w):
        t = (w ** 2).sum(axis=1) / self.rho ** 2
        out = np.zeros(w.shape[0], dtype=complex)
        inside = t < 1
        out[inside] = np.exp(-1.0 / (1.0 - t[inside]))
        return out

    def _jet(self, p, K, exact):
        raise NotAnalytic("the bump profile has no convergent Taylor expansion")

    def _order(self, p, K):
        raise NotAnalytic("the bump profile has no convergent Taylor expansion")


def monomial_symbol(gamma):
    """``(i w)^gamma / gamma!``, the symbol of the normalized derivative D^gamma."""
    gamma = tuple(int(g) for g in gamma)
    d = len(gamma)
    factors = [Power(Coordinate(t, d), g) for t, g in enumerate(gamma) if g]
    c = GaussianRational(0, 1) ** sum(gamma) / mi.factorial(gamma)
    if not factors:
        return Constant(1, d)
    return Scale(c, Product(factors) if len(factors) > 1 else factors[0])


def derivative(gamma, child):
    """Symbol of ``D^gamma`` applied to the generator with symbol ``child``."""
    if not any(gamma):
        return child
    return Product([monomial_symbol(gamma), child])


def _merge_planes(planes):
    out = []
    for a, c, m in planes:
        a = np.asarray(a, dtype=float)
        for k, (b, e, n) in enumerate(out):
            # same hyperplane up to scaling
            s = np.dot(a, b) / np.dot(b, b)
            if np.allclose(a, s * b, atol=1e-12) and abs(c - s * e) <= 1e-12:
                out[k] = (b, e, n + m)
                break
        else:
            out.append((a, float(c), int(m)))
    return out


class Embed(FourierSymbol):
    """A univariate symbol acting on coordinate ``j`` of a d-variate point."""

    def __init__(self, child, j, d):
        if child.d != 1:
            raise ValueError("only univariate symbols can be embedded")
        self.child, self.j, self.d = child, int(j), int(d)
        self._decay = 0.0 if d > 1 else None

    def _eval(self, w):
        return self.child._eval(w[:, self.j:self.j + 1])

    def _jet(self, p, K, exact):
        j1 = self.child._jet(p[:, self.j:self.j + 1], K, exact)
        n = mi.size(self.d, K)
        out = np.empty((p.shape[0], n), dtype=object if exact else complex)
        out[:] = GaussianRational(0) if exact else 0
        pos = mi.position(self.d, K)
        for e in range(K + 1):
            g = tuple(e if t == self.j else 0 for t in range(self.d))
            out[:, pos[g]] = j1.coeffs[:, e]
        return TaylorJet(out, p, K)

    def _order(self, p, K):
        return self.child._order(p[self.j:self.j + 1], K)

    def linear_zeros(self):
        out = []
        for a, c, m in self.child.linear_zeros():
            b = np.zeros(self.d)
            b[self.j] = a[0]
            out.append((b, c, m))
        return out

    def _structural_decay(self):
        return self.child.decay

    def __repr__(self):
        return f"{self.child!r}[w{self.j}]"


def combine(row, entries):
    """``sum_j row_j(w) * entries_j(w)`` for a 1 x r trigonometric row."""
    terms = []
    for j, e in enumerate(entries):
        t = row.entry(0, j)
        if t.coeffs:
            terms.append(Product([TrigSymbol(t), e]))
    if not terms:
        return Constant(0, entries[0].d)
    return Sum(terms) if len(terms) > 1 else terms[0]

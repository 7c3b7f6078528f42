"""Matrices of trigonometric polynomials ``A(w) = sum_j C_j exp(-i j.w)``.

Coefficients are stored as a dict from integer tuples ``j`` to ``rows x
cols`` arrays (complex, or object arrays of ``GaussianRational`` for exact
work).  Scalars and vectors are the 1x1 and r x 1 cases.
"""
from math import pi

import numpy as np

from . import multiindex as mi
from .exact import GaussianRational, exact_zeros, fourier_monomial, to_complex_array, to_exact_array
from .jet import TaylorJet


def _as_key(j, d):
    if isinstance(j, str):
        j = mi.from_str(j)
    elif np.isscalar(j):
        j = (int(j),)
    j = tuple(int(x) for x in j)
    if len(j) != d:
        raise ValueError(f"index {j} does not have {d} entries")
    return j


def _quarter_turns(x, tol=1e-9):
    """Integer n with x = n*pi/2, or None."""
    q = x / (pi / 2)
    n = np.rint(q)
    if np.all(np.abs(q - n) <= tol):
        return n.astype(int)
    return None


_PHASE = {0: GaussianRational(1), 1: GaussianRational(0, -1), 2: GaussianRational(-1), 3: GaussianRational(0, 1)}


class TrigPolyMatrix:
    """Matrix-valued 2*pi-periodic trigonometric polynomial.

    Parameters
    ----------
    coeffs : dict
        ``j -> C_j``; keys are int tuples (ints allowed when d = 1, strings
        like ``"(1,0)"`` also accepted).  Values are scalars or arrays.
    d : int
    shape : tuple, optional
        ``(rows, cols)``; inferred from the first coefficient.
    exact : bool, optional
        Force exact (True) or complex (False) storage. By default exact
        storage is used when every coefficient is an exact scalar.
    """

    def __init__(self, coeffs, d, shape=None, exact=None):
        self.d = int(d)
        items = [(_as_key(j, self.d), np.asarray(c, dtype=object if _is_exact_like(c) else complex)) for j, c in coeffs.items()]
        if shape is None:
            shape = items[0][1].shape if items else (1, 1)
            shape = (1, 1) if shape == () else shape
            if len(shape) == 1:
                shape = (shape[0], 1)
        self.shape = tuple(shape)
        if exact is None:
            exact = bool(items) and all(c.dtype == object for _, c in items)
        self.exact = bool(exact)
        out = {}
        for j, c in items:
            c = np.broadcast_to(c.reshape(self.shape) if c.size == np.prod(self.shape) else c, self.shape)
            c = to_exact_array(c) if self.exact else to_complex_array(c)
            if j in out:
                c = out[j] + c
            out[j] = c
        self.coeffs = {j: c for j, c in out.items() if _nonzero(c)}

    # constructors -------------------------------------------------------
    @classmethod
    def scalar(cls, coeffs, d=1, exact=None):
        return cls({j: np.array([[c]], dtype=object if _is_exact_like(c) else complex) for j, c in coeffs.items()}, d, (1, 1), exact)

    @classmethod
    def constant(cls, C, d, exact=None):
        C = np.atleast_2d(np.asarray(C, dtype=object if _is_exact_like(C) else complex))
        return cls({mi.zero(d): C}, d, C.shape, exact)

    @classmethod
    def identity(cls, r, d, exact=True):
        C = exact_zeros((r, r)) if exact else np.zeros((r, r), complex)
        for i in range(r):
            C[i, i] = GaussianRational(1) if exact else 1.0
        return cls({mi.zero(d): C}, d, (r, r), exact)

    @classmethod
    def zeros(cls, shape, d, exact=True):
        return cls({}, d, shape, exact)

    @classmethod
    def from_entries(cls, entries, d):
        """Assemble from a grid of scalar (1x1) trig polys."""
        rows, cols = len(entries), len(entries[0])
        exact = all(e.exact for row in entries for e in row)
        out = {}
        for a, row in enumerate(entries):
            for b, e in enumerate(row):
                for j, c in e.coeffs.items():
                    if j not in out:
                        out[j] = exact_zeros((rows, cols)) if exact else np.zeros((rows, cols), complex)
                    out[j][a, b] = c[0, 0] if exact else complex(c[0, 0])
        return cls(out, d, (rows, cols), exact)

    # properties ------------------------------------------------------------
    @property
    def rows(self):
        return self.shape[0]

    @property
    def cols(self):
        return self.shape[1]

    @property
    def support(self):
        return sorted(self.coeffs, key=lambda j: (sum(abs(x) for x in j), j))

    def entry(self, a, b):
        return TrigPolyMatrix({j: c[a:a + 1, b:b + 1] for j, c in self.coeffs.items()}, self.d, (1, 1), self.exact)

    def to_complex(self):
        return TrigPolyMatrix({j: to_complex_array(c) for j, c in self.coeffs.items()}, self.d, self.shape, False)

    def to_exact(self):
        return TrigPolyMatrix({j: to_exact_array(c) for j, c in self.coeffs.items()}, self.d, self.shape, True)

    def _zero_coeff(self, shape=None):
        shape = shape or self.shape
        return exact_zeros(shape) if self.exact else np.zeros(shape, complex)

    # evaluation ------------------------------------------------------------
    def __call__(self, omega):
        """Values at ``omega`` of shape ``(..., d)`` -> ``(..., rows, cols)``."""
        omega = np.asarray(omega, dtype=float)
        if self.d == 1 and (omega.ndim == 0 or omega.shape[-1] != 1):
            omega = omega[..., None]
        lead = omega.shape[:-1]
        if not self.coeffs:
            return np.zeros(lead + self.shape, complex)
        keys = list(self.coeffs)
        J = np.array(keys, dtype=float)
        C = np.stack([to_complex_array(self.coeffs[j]) for j in keys])
        ph = np.exp(-1j * (omega.reshape(-1, self.d) @ J.T))
        val = np.einsum("nj,jab->nab", ph, C)
        return val.reshape(lead + self.shape)

    def jet_at(self, p, K, exact=None):
        """Degree-K jets at ``p``, lead shape ``(rows, cols)`` (or batch first).

        ``D^g A(p) = sum_j C_j (-i j)^g / g! * exp(-i j.p)``.  Exact output
        is produced when the coefficients are exact and every phase
        ``j.p`` is a multiple of pi/2.
        """
        p = np.asarray(p, dtype=float)
        if p.ndim == 0:
            p = p.reshape(1)
        d = self.d
        E = mi.exponent_array(d, K)
        n = len(E)
        batch = p.shape[:-1]
        keys = list(self.coeffs)
        if exact is None:
            exact = self.exact
        if exact:
            phases = []
            for j in keys:
                t = _quarter_turns(p @ np.array(j, dtype=float))
                if t is None or not self.exact:
                    from .errors import NotExact
                    raise NotExact("phase at the base point is not a quarter turn")
                phases.append(t)
            out = exact_zeros(batch + self.shape + (n,))
            for j, t in zip(keys, phases):
                mono = np.empty(n, dtype=object)
                for e_i, g in enumerate(E):
                    mono[e_i] = fourier_monomial(j, tuple(int(x) for x in g))
                C = self.coeffs[j]
                tt = np.atleast_1d(t)
                for b_idx in np.ndindex(*batch) if batch else [()]:
                    ph = _PHASE[int(tt[b_idx] if batch else tt.ravel()[0]) % 4]
                    out[b_idx] = out[b_idx] + (C * ph)[..., None] * mono
            return TaylorJet(out, p, K)
        if not keys:
            return TaylorJet(np.zeros(batch + self.shape + (n,), complex), p, K)
        J = np.array(keys, dtype=float)
        C = np.stack([to_complex_array(self.coeffs[j]) for j in keys])
        fact = np.array([mi.factorial(tuple(g)) for g in E], dtype=float)
        mono = np.prod((-1j * J[:, None, :]) ** E[None, :, :], axis=-1) / fact
        ph = np.exp(-1j * (p.reshape(-1, d) @ J.T))
        out = np.einsum("mj,jab,jn->mabn", ph, C, mono)
        return TaylorJet(out.reshape(batch + self.shape + (n,)), p, K)

    # algebra ------------------------------------------------------------
    def _binary_exact(self, other):
        return self.exact and other.exact

    def _coerce_pair(self, other):
        if not isinstance(other, TrigPolyMatrix):
            other = TrigPolyMatrix.constant(np.broadcast_to(np.asarray(other, dtype=object if _is_exact_like(other) else complex), self.shape), self.d)
        if other.d != self.d:
            raise ValueError("dimension mismatch")
        ex = self.exact and other.exact
        a = self if self.exact == ex else self.to_complex()
        b = other if other.exact == ex else other.to_complex()
        return a, b, ex

    def __add__(self, other):
        a, b, ex = self._coerce_pair(other)
        if a.shape != b.shape:
            raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
        out = dict(a.coeffs)
        for j, c in b.coeffs.items():
            out[j] = out[j] + c if j in out else c
        return TrigPolyMatrix(out, self.d, self.shape, ex)

    __radd__ = __add__

    def __neg__(self):
        return TrigPolyMatrix({j: -c for j, c in self.coeffs.items()}, self.d, self.shape, self.exact)

    def __sub__(self, other):
        return self + (-other if isinstance(other, TrigPolyMatrix) else -np.asarray(other))

    def __mul__(self, c):
        """Scalar multiple."""
        if isinstance(c, TrigPolyMatrix):
            if c.shape != (1, 1) and self.shape != (1, 1):
                raise ValueError("use @ for matrix products")
            a, b, ex = self._coerce_pair(c) if c.shape == self.shape else (self, c, self.exact and c.exact)
            if not ex:
                a, b = (a.to_complex() if a.exact else a), (b.to_complex() if b.exact else b)
            big, small = (a, b) if b.shape == (1, 1) else (b, a)
            out = {}
            for j1, c1 in big.coeffs.items():
                for j2, c2 in small.coeffs.items():
                    j = tuple(x + y for x, y in zip(j1, j2))
                    v = c1 * c2[0, 0]
                    out[j] = out[j] + v if j in out else v
            return TrigPolyMatrix(out, self.d, big.shape, ex)
        if self.exact and _is_exact_like(c):
            c = GaussianRational.coerce(c)
            return TrigPolyMatrix({j: v * c for j, v in self.coeffs.items()}, self.d, self.shape, True)
        return TrigPolyMatrix({j: to_complex_array(v) * complex(c) for j, v in self.coeffs.items()}, self.d, self.shape, False)

    __rmul__ = __mul__

    def __matmul__(self, other):
        a, b, ex = self._coerce_pair(other)
        if a.cols != b.rows:
            raise ValueError(f"cannot multiply {a.shape} by {b.shape}")
        out = {}
        for j1, c1 in a.coeffs.items():
            for j2, c2 in b.coeffs.items():
                j = tuple(x + y for x, y in zip(j1, j2))
                v = c1 @ c2 if not ex else _obj_matmul(c1, c2)
                out[j] = out[j] + v if j in out else v
        return TrigPolyMatrix(out, self.d, (a.rows, b.cols), ex)

    def adjoint(self):
        """``A*(w) = A(w)^H``: conjugate, transpose, reflect indices."""
        out = {}
        for j, c in self.coeffs.items():
            cc = np.vectorize(lambda x: x.conjugate(), otypes=[object])(c) if self.exact else np.conj(c)
            out[tuple(-x for x in j)] = cc.T.copy()
        return TrigPolyMatrix(out, self.d, (self.cols, self.rows), self.exact)

    def dual(self):
        """Conjugate-transpose every Fourier coefficient, keeping its index.

        This is the row ``v*`` used with weight vectors: for v with real
        coefficients it is just the transpose.
        """
        out = {}
        for j, c in self.coeffs.items():
            cc = np.vectorize(lambda x: x.conjugate(), otypes=[object])(c) if self.exact else np.conj(c)
            out[j] = cc.T.copy()
        return TrigPolyMatrix(out, self.d, (self.cols, self.rows), self.exact)

    def dilate(self, m=2):
        """``A(m w)`` (index multiplication)."""
        return TrigPolyMatrix({tuple(m * x for x in j): c for j, c in self.coeffs.items()}, self.d, self.shape, self.exact)

    def shift(self, k):
        """Multiply by ``exp(-i k.w)``."""
        k = _as_key(k, self.d)
        return TrigPolyMatrix({tuple(x + y for x, y in zip(j, k)): c for j, c in self.coeffs.items()}, self.d, self.shape, self.exact)

    @property
    def T(self):
        return TrigPolyMatrix({j: c.T.copy() for j, c in self.coeffs.items()}, self.d, (self.cols, self.rows), self.exact)

    def max_abs_coeff(self):
        return max((float(np.abs(to_complex_array(c)).max()) for c in self.coeffs.values()), default=0.0)

    def to_json(self):
        """``{"r","c","d","coeffs": {"(j)": [[[re, im], ...], ...]}}``."""
        out = {}
        for j in self.support:
            c = to_complex_array(self.coeffs[j])
            out[mi.to_str(j)] = [[[float(x.real), float(x.imag)] for x in row] for row in c]
        return {"rows": self.rows, "cols": self.cols, "d": self.d, "coeffs": out}

    def __repr__(self):
        return f"TrigPolyMatrix(shape={self.shape}, d={self.d}, terms={len(self.coeffs)}, exact={self.exact})"


def TrigPoly(coeffs, d=1, exact=None):
    """Scalar trigonometric polynomial (1x1 ``TrigPolyMatrix``)."""
    return TrigPolyMatrix.scalar(coeffs, d, exact)


def _is_exact_like(c):
    from .exact import is_exact_scalar
    if isinstance(c, np.ndarray):
        return c.dtype == object and all(is_exact_scalar(x) for x in c.ravel())
    if isinstance(c, (list, tuple)):
        return all(_is_exact_like(x) for x in c)
    return is_exact_scalar(c)


def _nonzero(c):
    if c.dtype == object:
        return any(bool(x) for x in c.ravel())
    return bool(np.any(c != 0))


def _obj_matmul(a, b):
    out = exact_zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for k in range(b.shape[1]):
            s = GaussianRational(0)
            for j in range(a.shape[1]):
                s = s + a[i, j] * b[j, k]
            out[i, k] = s
    return out

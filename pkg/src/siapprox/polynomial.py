"""Polynomials in the normalized monomial basis ``()^a = x^a / a!``.

Coefficients may be Python complex numbers or exact scalars (ints,
Fractions, ``GaussianRational``); arithmetic stays exact when all inputs
are exact.
"""
import numpy as np

from . import multiindex as mi
from .exact import GaussianRational, is_exact_scalar


def _is_zero(c, tol):
    if is_exact_scalar(c):
        return not c
    return abs(c) <= tol


class Polynomial:
    """Sparse polynomial ``sum_a c_a x^a / a!`` in ``d`` variables.

    Parameters
    ----------
    d : int
        Number of variables.
    coeffs : dict, optional
        Map multi-index -> coefficient. Zero entries are dropped.
    tol : float
        Floating coefficients with ``|c| <= tol`` are dropped (0 keeps all
        nonzero floats).
    """

    def __init__(self, d, coeffs=None, tol=0.0):
        self.d = int(d)
        out = {}
        for alpha, c in (coeffs or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.d or min(alpha, default=0) < 0:
                raise ValueError(f"bad multi-index {alpha} for d={self.d}")
            if not _is_zero(c, tol):
                out[alpha] = c
        self.coeffs = out

    @classmethod
    def monomial(cls, alpha, coeff=1):
        """The normalized monomial ``coeff * ()^alpha``."""
        return cls(len(alpha), {tuple(alpha): coeff})

    @classmethod
    def constant(cls, d, c=1):
        return cls(d, {mi.zero(d): c})

    @classmethod
    def from_plain(cls, d, coeffs):
        """From ordinary monomial coefficients ``sum_a b_a x^a``."""
        return cls(d, {tuple(a): c * mi.factorial(a) for a, c in coeffs.items()})

    def to_plain(self):
        """Ordinary monomial coefficients ``b_a`` with ``p = sum b_a x^a``."""
        out = {}
        for a, c in self.coeffs.items():
            out[a] = _frac(c, mi.factorial(a))
        return out

    @property
    def degree(self):
        """Total degree; -1 for the zero polynomial."""
        return max((sum(a) for a in self.coeffs), default=-1)

    @property
    def exact(self):
        return all(is_exact_scalar(c) for c in self.coeffs.values())

    def _check(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial.constant(self.d, other)
        if other.d != self.d:
            raise ValueError(f"dimension mismatch: {self.d} vs {other.d}")
        return other

    def __add__(self, other):
        other = self._check(other)
        out = dict(self.coeffs)
        for a, c in other.coeffs.items():
            out[a] = out[a] + c if a in out else c
        return Polynomial(self.d, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.d, {a: -c for a, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial(self.d, {a: c * other for a, c in self.coeffs.items()})
        other = self._check(other)
        out = {}
        # ()^a ()^b = binom(a+b, a) ()^(a+b)
        for a, ca in self.coeffs.items():
            for b, cb in other.coeffs.items():
                g = mi.add(a, b)
                term = ca * cb * mi.binomial(g, a)
                out[g] = out[g] + term if g in out else term
        return Polynomial(self.d, out)

    def __rmul__(self, other):
        return self * other

    def diff(self, gamma):
        """Normalized derivative ``D^gamma = d^gamma / gamma!``."""
        gamma = tuple(gamma)
        f = mi.factorial(gamma)
        out = {}
        for a, c in self.coeffs.items():
            if mi.leq(gamma, a):
                out[mi.sub(a, gamma)] = _frac(c, f)
        return Polynomial(self.d, out)

    def partial(self, gamma):
        """Plain partial derivative ``d^gamma`` (lowers the index)."""
        gamma = tuple(gamma)
        return Polynomial(self.d, {mi.sub(a, gamma): c for a, c in self.coeffs.items() if mi.leq(gamma, a)})

    def __call__(self, x):
        """Evaluate at ``x`` of shape ``(d,)`` or ``(n, d)``."""
        x = np.asarray(x)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        out = np.zeros(x.shape[0], dtype=complex)
        for a, c in self.coeffs.items():
            out += complex(c) * np.prod(x ** np.array(a), axis=1) / mi.factorial(a)
        return out[0] if single else out

    def eval_exact(self, x):
        """Exact evaluation at a point with rational coordinates."""
        total = GaussianRational(0)
        for a, c in self.coeffs.items():
            term = GaussianRational.coerce(c)
            for xi, ai in zip(x, a):
                term = term * GaussianRational.coerce(xi) ** ai
            total = total + term / mi.factorial(a)
        return total

    def max_abs_coeff(self):
        return max((abs(complex(c)) for c in self.coeffs.values()), default=0.0)

    def is_close(self, other, tol=1e-10):
        return (self - other).max_abs_coeff() <= tol

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.d, other)
        diff = self - other
        return all(_is_zero(c, 0.0) for c in diff.coeffs.values())

    def __hash__(self):
        return hash(tuple(sorted(self.coeffs)))

    def to_json(self):
        """Map of multi-index strings to ``[re, im]`` pairs."""
        return {mi.to_str(a): [float(complex(c).real), float(complex(c).imag)]
                for a, c in sorted(self.coeffs.items(), key=lambda t: (sum(t[0]), t[0]))}

    def __repr__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for a in sorted(self.coeffs, key=lambda t: (sum(t), t)):
            c = self.coeffs[a]
            parts.append(f"{c}*()^{mi.to_str(a)}" if any(a) else f"{c}")
        return " + ".join(parts)


def _frac(c, f):
    if f == 1:
        return c
    if isinstance(c, GaussianRational):
        return c / f
    if is_exact_scalar(c):
        from fractions import Fraction
        return Fraction(c) / f
    return c / f

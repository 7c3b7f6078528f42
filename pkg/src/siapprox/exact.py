"""Gaussian rationals and small exact linear algebra.

Exact mode stores jet and trigonometric-polynomial coefficients as
``GaussianRational`` objects inside numpy object arrays, so zero tests are
crisp instead of tolerance based.
"""
from fractions import Fraction
from functools import lru_cache
from numbers import Integral, Rational

import numpy as np


_FZERO = Fraction(0)


class GaussianRational:
    """Complex number with rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if isinstance(re, Fraction) else Fraction(re)
        self.im = im if isinstance(im, Fraction) else Fraction(im)

    @classmethod
    def coerce(cls, x):
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, (complex, np.complexfloating)):
            return cls(Fraction(float(x.real)), Fraction(float(x.imag)))
        if isinstance(x, (Rational, Integral)):
            return cls(x)
        if isinstance(x, (float, np.floating)):
            return cls(Fraction(float(x)))
        raise TypeError(f"cannot convert {type(x).__name__} to a Gaussian rational")

    def _other(self, other):
        if type(other) is GaussianRational:
            return other
        try:
            return GaussianRational.coerce(other)
        except TypeError:
            return None

    def __add__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return GaussianRational(o.re - self.re, o.im - self.im)

    def __mul__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        if not self.im and not o.im:
            return GaussianRational(self.re * o.re, _FZERO)
        return GaussianRational(self.re * o.re - self.im * o.im,
                                self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        if not self.im and not o.im:
            return GaussianRational(self.re / o.re, _FZERO)
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by exact zero")
        return GaussianRational((self.re * o.re + self.im * o.im) / den,
                                (self.im * o.re - self.re * o.im) / den)

    def __rtruediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, n):
        if not isinstance(n, Integral):
            return NotImplemented
        if n < 0:
            return GaussianRational(1) / (self ** (-n))
        out = GaussianRational(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __eq__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __abs__(self):
        return abs(complex(self))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    @property
    def real(self):
        return self.re

    @property
    def imag(self):
        return self.im

    def __repr__(self):
        if self.im == 0:
            return f"GaussianRational({self.re})"
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"


GR = GaussianRational
ZERO = GaussianRational(0)
ONE = GaussianRational(1)
I = GaussianRational(0, 1)


_UNITS = None


@lru_cache(maxsize=None)
def fourier_monomial(j, g):
    """``(-i j)^g / g!`` for integer tuples j, g, exactly."""
    global _UNITS
    if _UNITS is None:
        _UNITS = (GaussianRational(1), GaussianRational(0, -1), GaussianRational(-1), GaussianRational(0, 1))
    num = 1
    fact = 1
    for jt, gt in zip(j, g):
        num *= int(jt) ** int(gt)
        for t in range(2, int(gt) + 1):
            fact *= t
    u = _UNITS[sum(int(x) for x in g) % 4]
    f = Fraction(num, fact)
    return GaussianRational(u.re * f, u.im * f)


def is_exact_scalar(x):
    """True for ints, Fractions and Gaussian rationals (floats are not)."""
    return isinstance(x, (GaussianRational, Rational, Integral)) and not isinstance(x, bool)


def to_exact_array(a):
    """Object array of Gaussian rationals (floats converted bit-exactly)."""
    a = np.asarray(a, dtype=object) if not isinstance(a, np.ndarray) else a
    out = np.empty(a.shape, dtype=object)
    flat_in = a.ravel()
    flat_out = out.ravel()
    for i, x in enumerate(flat_in):
        flat_out[i] = GaussianRational.coerce(x)
    return out


def to_complex_array(a):
    """Complex128 copy of an exact or numeric array."""
    a = np.asarray(a)
    if a.dtype != object:
        return a.astype(complex)
    out = np.empty(a.shape, dtype=complex)
    flat = out.ravel()
    for i, x in enumerate(a.ravel()):
        flat[i] = complex(x)
    return out


def exact_zeros(shape):
    out = np.empty(shape, dtype=object)
    out.fill(ZERO)
    return out


def rref(A):
    """Reduced row echelon form over the Gaussian rationals.

    Returns ``(R, pivots)`` with ``R`` a new object array.
    """
    R = to_exact_array(A).copy()
    m, n = R.shape
    pivots = []
    row = 0
    for col in range(n):
        if row >= m:
            break
        piv = None
        for i in range(row, m):
            if R[i, col]:
                piv = i
                break
        if piv is None:
            continue
        if piv != row:
            R[[row, piv]] = R[[piv, row]]
        inv = ONE / R[row, col]
        nz = [j for j in range(col, n) if R[row, j]]
        for j in nz:
            R[row, j] = R[row, j] * inv
        for i in range(m):
            if i != row and R[i, col]:
                f = R[i, col]
                for j in nz:
                    R[i, j] = R[i, j] - f * R[row, j]
        pivots.append(col)
        row += 1
    return R, pivots


def exact_solve(A, b):
    """Solve ``A x = b`` exactly; returns ``x`` or None when inconsistent.

    Free variables are set to zero. ``b`` may be a vector or a matrix.
    """
    A = to_exact_array(A)
    b = to_exact_array(b)
    vec = b.ndim == 1
    if vec:
        b = b[:, None]
    m, n = A.shape
    aug = np.concatenate([A, b], axis=1)
    R, pivots = rref(aug)
    if any(p >= n for p in pivots):
        return None
    x = exact_zeros((n, b.shape[1]))
    for r, p in enumerate(pivots):
        x[p] = R[r, n:]
    return x[:, 0] if vec else x


def exact_nullspace(A):
    """Basis of the right nullspace of ``A`` (list of object vectors)."""
    A = to_exact_array(A)
    m, n = A.shape
    R, pivots = rref(A)
    free = [j for j in range(n) if j not in pivots]
    basis = []
    for f in free:
        v = exact_zeros(n)
        v[f] = ONE
        for r, p in enumerate(pivots):
            v[p] = -R[r, f]
        basis.append(v)
    return basis


def exact_affine_solve(A, b):
    """Particular solution and nullspace basis of ``A x = b`` from one elimination.

    Returns ``(x0, basis)`` or None when the system is inconsistent.
    """
    A = to_exact_array(A)
    b = to_exact_array(b).reshape(-1, 1)
    m, n = A.shape
    R, pivots = rref(np.concatenate([A, b], axis=1))
    if any(p >= n for p in pivots):
        return None
    x0 = exact_zeros(n)
    for r, p in enumerate(pivots):
        x0[p] = R[r, n]
    free = [j for j in range(n) if j not in set(pivots)]
    basis = []
    for f in free:
        v = exact_zeros(n)
        v[f] = ONE
        for r, p in enumerate(pivots):
            v[p] = -R[r, f]
        basis.append(v)
    return x0, basis

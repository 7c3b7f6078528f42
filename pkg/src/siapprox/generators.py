"""Constructors for the generators used throughout the package.

All generators are given by their Fourier transforms, normalized so that
``f(w) = integral phi(x) exp(-i w.x) dx``.
"""
from fractions import Fraction
from itertools import combinations
from math import pi

import numpy as np

from . import multiindex as mi
from .errors import DegenerateDirections, InputError, PreconditionFailed
from .exact import GaussianRational, exact_solve, exact_zeros
from .symbol import (Affine, Constant, Coordinate, Dilation, Embed, Exponential, FourierSymbol, Modulation,
                     Power, Product, Quotient, Scale, Sum, combine, derivative)
from .trig import TrigPolyMatrix

I = GaussianRational(0, 1)


class GeneratorVector:
    """Finite list of symbols sharing a dimension.

    Parameters
    ----------
    entries : list of FourierSymbol
    labels : list of str, optional
    """

    def __init__(self, entries, labels=None):
        entries = list(entries)
        if not entries:
            raise ValueError("a generator vector needs at least one entry")
        self.entries = entries
        self.d = entries[0].d
        if any(e.d != self.d for e in entries):
            raise ValueError("all generators must share the dimension")
        self.labels = list(labels) if labels is not None else [f"phi{i + 1}" for i in range(len(entries))]

    @property
    def r(self):
        return len(self.entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @property
    def decay(self):
        return min(e.decay for e in self.entries)

    def __call__(self, omega):
        """Values with shape ``omega.shape[:-1] + (r,)``."""
        return np.stack([e(omega) for e in self.entries], axis=-1)

    def jet(self, p, K, exact=False):
        """Column of jets; coefficient array has shape ``(r, |Z_K|)``."""
        from .jet import TaylorJet
        jets = [e.jet(p, K, exact) for e in self.entries]
        if exact and not all(j.exact for j in jets):
            jets = [j.to_complex() for j in jets]
        c = np.stack([j.coeffs for j in jets], axis=-2)
        return TaylorJet(c, jets[0].base, K)

    def __repr__(self):
        return f"GeneratorVector(r={self.r}, d={self.d})"


def as_vector(x):
    if isinstance(x, GeneratorVector):
        return x
    if isinstance(x, FourierSymbol):
        return GeneratorVector([x])
    return GeneratorVector(list(x))


def delta(d=1):
    """Dirac delta: the constant symbol 1."""
    return Constant(1, d)


def bspline(k):
    """Univariate B-spline of order k supported on [0, k]."""
    k = int(k)
    if k < 1:
        raise InputError("B-spline order must be at least 1")
    w = Coordinate(0, 1)
    return Quotient(Power(1 - Exponential([1.0]), k), Power(Scale(I, w), k))


def _hyperplane_count(dirs):
    """Largest number of directions inside one hyperplane."""
    dirs = np.asarray(dirs, dtype=float)
    n, d = dirs.shape
    if d == 1:
        return 0
    best = 0
    for sub in combinations(range(n), d - 1):
        S = dirs[list(sub)]
        if np.linalg.matrix_rank(S) < d - 1:
            continue
        # normal of the hyperplane spanned by S
        _, _, Vt = np.linalg.svd(S)
        nrm = Vt[-1]
        best = max(best, int(np.sum(np.abs(dirs @ nrm) < 1e-12)))
    return best


def boxspline(directions):
    """Box spline with the given integer directions.

    Raises
    ------
    DegenerateDirections
        When the directions do not span the whole space.
    """
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    if dirs.size == 0:
        raise DegenerateDirections("no directions given")
    n, d = dirs.shape
    if np.linalg.matrix_rank(dirs) < d:
        raise DegenerateDirections(f"{n} directions do not span R^{d}")
    factors = [Quotient(1 - Exponential(xi), Scale(I, Affine(xi))) for xi in dirs]
    sym = Product(factors)
    return sym.with_decay(n - _hyperplane_count(dirs))


def box221():
    return boxspline([[1, 0], [1, 0], [0, 1], [0, 1], [1, 1]])


def fredrickson():
    """The pair of C^1 piecewise-cubic Fredrickson elements on the three-direction mesh."""
    u, v = Coordinate(0, 2), Coordinate(1, 2)
    w = Affine([1.0, 1.0])
    Eu, Ev, Ew = 1 - Exponential([1.0, 0.0]), 1 - Exponential([0.0, 1.0]), 1 - Exponential([1.0, 1.0])
    num = Product([Scale(I, v * Ew - w * Ev), Eu, Ev, Ew])
    den = Power(Product([u, v, w]), 2)
    phi1 = Quotient(num, den).with_decay(3)
    phi2 = Dilation([[0.0, 1.0], [1.0, 0.0]], phi1).with_decay(3)
    return GeneratorVector([phi1, phi2], ["phi1", "phi2"])


def convolve(*symbols):
    """Convolution of generators: the product of their symbols."""
    if len(symbols) == 1 and isinstance(symbols[0], (list, tuple)):
        symbols = symbols[0]
    return Product(list(symbols))


def shifted(symbol, shift):
    """Integer translate ``phi(. - shift)``."""
    shift = np.atleast_1d(np.asarray(shift, dtype=float))
    return Product([Exponential(shift), symbol])


def _moment_corrector(F, k):
    """Exact coefficients b_n (n < k) with (sum b_n t^n) F(t) = 1 + O(t^k).

    ``F`` is a univariate symbol with ``F(0) = 1`` and exact jets at 0.
    """
    f = F.jet([0.0], k - 1, exact=True).coeffs
    # lower-triangular Toeplitz system: sum_{m<=n} f_{n-m} b_m = delta_{n0}
    A = exact_zeros((k, k))
    for n in range(k):
        for m in range(n + 1):
            A[n, m] = f[n - m]
    rhs = exact_zeros(k)
    rhs[0] = GaussianRational(1)
    return exact_solve(A, rhs)


def _poly1(b):
    t = Coordinate(0, 1)
    terms = [Scale(c, Power(t, n)) if n else Constant(c, 1) for n, c in enumerate(b) if c]
    return Sum(terms) if len(terms) > 1 else terms[0]


def bad_pair_g(k, smoothing=4):
    """Default bivariate g for ``bad_pair``.

    ``g1(t) = Q(t) B_k(t) B_m(t/2)`` with Q of degree k-1 chosen so that
    ``1 - g1 = O(t^k)``; then ``g(w) = g1(w1) g1(w2)``.  The dilated factor
    adds decay without raising the order of the zeros at odd multiples of
    2*pi, which stays exactly k.
    """
    F = Product([bspline(k), Dilation(0.5, bspline(smoothing))])
    b = _moment_corrector(F, k)
    g1 = Product([_poly1(b), F])
    return Product([Embed(g1, 0, 2), Embed(g1, 1, 2)]).with_decay(smoothing + 1)


def _lattice_reps(R=2):
    return [(2 * pi * a, 2 * pi * b) for a in range(-R, R + 1) for b in range(-R, R + 1) if (a, b) != (0, 0)]


def check_bad_pair_g(g, k):
    """Jet checks behind ``bad_pair``; returns a list of failure strings."""
    K = k + 2
    fails = []
    o0 = (1 - g).zero_order_at([0.0, 0.0], K)
    if o0 < k:
        fails.append(f"1 - g vanishes to order {o0} < {k} at the origin")
    for p in _lattice_reps(1) + [(4 * pi, 0.0), (0.0, 4 * pi)]:
        o = g.zero_order_at(p, K)
        if o < k:
            fails.append(f"g vanishes to order {o} < {k} at {tuple(round(x / (2 * pi)) for x in p)}*2pi")
    return fails


def bad_pair(k=4, g=None):
    """Two generators whose space has order k but admits no good superfunction.

    ``phi1 = g + e D^(0,2) g`` and ``phi2 = g - e D^(2,0) g`` with ``e`` the
    exponential of frequency (2*pi, 0); on the Fourier side ``e`` shifts
    the argument by (2*pi, 0).

    Raises
    ------
    PreconditionFailed
        If ``g`` does not have the required zeros (checked by jets).
    """
    k = int(k)
    if k <= 2:
        raise PreconditionFailed(f"k must exceed 2, got {k}")
    if g is None:
        g = bad_pair_g(k)
    fails = check_bad_pair_g(g, k)
    if fails:
        raise PreconditionFailed("; ".join(fails))
    b = [2 * pi, 0.0]
    m = max(g.decay - 2, 0)
    phi1 = Sum([g, Modulation(b, derivative((0, 2), g))]).with_decay(m)
    phi2 = Sum([g, Scale(-1, Modulation(b, derivative((2, 0), g)))]).with_decay(m)
    out = GeneratorVector([phi1, phi2], ["phi1", "phi2"])
    out.g = g
    out.k = k
    return out


def quadratic_trig(k):
    """Exact univariate T with ``T(t) = t^2/2 + O(t^(k+2))`` on support 0..k+1."""
    n = k + 2
    A = exact_zeros((n, n))
    for row in range(n):
        for j in range(n):
            A[row, j] = _mono(j, row)
    rhs = exact_zeros(n)
    rhs[2] = GaussianRational(Fraction(1, 2))
    c = exact_solve(A, rhs)
    return {j: c[j] for j in range(n)}


def _mono(j, n):
    from math import factorial
    return GaussianRational(0, -j) ** n / factorial(n)


def bad_pair_v(k):
    """Trigonometric vector v with ``v - (()^(2,0), ()^(0,2)) = O(|w|^(k+2))``."""
    T = quadratic_trig(k)
    C = {}
    for j, c in T.items():
        for comp in range(2):
            key = (j, 0) if comp == 0 else (0, j)
            if key not in C:
                C[key] = exact_zeros((2, 1))
            C[key][comp, 0] = C[key][comp, 0] + c
    return TrigPolyMatrix(C, 2, (2, 1), True)


def superfunction_symbol(v, Phi):
    """``v* Phi``: the combination of generators with trigonometric weights.

    ``v*`` conjugates and transposes the Fourier coefficients of v.
    """
    Phi = as_vector(Phi)
    return combine(v.dual(), Phi.entries)


ALIASES = ("bspline:k", "boxspline:221", "fredrickson", "badpair:k")

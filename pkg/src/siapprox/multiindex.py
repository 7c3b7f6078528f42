"""Multi-index utilities.

Multi-indices are plain tuples of nonnegative ints.  ``Z_N`` is listed in
graded lexicographic order: by total degree, then lexicographically with
ascending tuples, so in two variables degree one reads ``(0, 1), (1, 0)``.
The descending variant is available for block-ordering experiments.
"""
from functools import lru_cache
from math import comb, factorial as _fact

import numpy as np


def degree(alpha):
    return sum(alpha)


def leq(alpha, beta):
    """Componentwise partial order."""
    return all(a <= b for a, b in zip(alpha, beta))


def add(alpha, beta):
    return tuple(a + b for a, b in zip(alpha, beta))


def sub(alpha, beta):
    return tuple(a - b for a, b in zip(alpha, beta))


def factorial(alpha):
    out = 1
    for a in alpha:
        out *= _fact(a)
    return out


def binomial(alpha, beta):
    out = 1
    for a, b in zip(alpha, beta):
        out *= comb(a, b)
    return out


def unit(d, j):
    return tuple(1 if i == j else 0 for i in range(d))


def zero(d):
    return (0,) * d


@lru_cache(maxsize=None)
def homogeneous(d, n, descending=False):
    """All alpha in Z_+^d with |alpha| = n, lexicographic within the degree."""
    if d == 0:
        return ((),) if n == 0 else ()
    if d == 1:
        return ((n,),)
    out = []
    for first in range(n + 1):
        for rest in homogeneous(d - 1, n - first):
            out.append((first,) + rest)
    out.sort(reverse=descending)
    return tuple(out)


@lru_cache(maxsize=None)
def graded(d, N, descending=False):
    """Z_N = {alpha : |alpha| <= N} in graded lexicographic order."""
    out = []
    for n in range(N + 1):
        out.extend(homogeneous(d, n, descending))
    return tuple(out)


def size(d, N):
    """|Z_N| = binom(N + d, d)."""
    return comb(N + d, d) if N >= 0 else 0


@lru_cache(maxsize=None)
def position(d, N):
    """Map alpha -> position in ``graded(d, N)``."""
    return {a: i for i, a in enumerate(graded(d, N))}


def below(alpha, strict=False):
    """All beta <= alpha (componentwise), in graded order."""
    d = len(alpha)
    out = [b for b in graded(d, degree(alpha)) if leq(b, alpha)]
    if strict:
        out = [b for b in out if b != tuple(alpha)]
    return out


@lru_cache(maxsize=None)
def exponent_array(d, N):
    """Integer array of shape (|Z_N|, d)."""
    return np.array(graded(d, N), dtype=int).reshape(-1, d)


def to_str(alpha):
    return "(" + ",".join(str(a) for a in alpha) + ")"


def from_str(s):
    s = s.strip()
    if s.startswith("(") or s.startswith("["):
        s = s[1:-1]
    parts = [p for p in s.replace(" ", "").split(",") if p != ""]
    return tuple(int(p) for p in parts)

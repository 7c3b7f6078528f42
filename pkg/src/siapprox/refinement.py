"""Vector refinement equations ``Phi(2w) = P(w) Phi(w)`` on the Fourier side.

Covers the solution space R(P) through its jets at the origin, Condition
Z_k and the two families of sum rules, the linear solver for the largest
feasible k, combined Gramians of all solutions and the flattening of masks
with ``P(0) = I``.
"""
import itertools
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, comb, log2, pi

import numpy as np

from . import multiindex as mi
from .decay import DEFAULT_RADII, fit_power_law, radial_fit
from .errors import (AssumptionViolated, DegenerateWarning, InputError, NullPencil, SingularExtension,
                     ZeroSolutionOnly)
from .exact import GaussianRational, exact_affine_solve, exact_nullspace, fourier_monomial, exact_solve, exact_zeros, to_complex_array, to_exact_array
from .generators import GeneratorVector
from .jet import ZERO_TOL, TaylorJet, jet_matmul, taylor_shift
from .ladder import BracketConfig, GramianSample, gramian, pencil_min, _weights
from .trig import TrigPolyMatrix

EIG_TOL = 1e-8
KERNEL_TOL = 1e-10
EVAL_RADIUS = 0.05
WORK_DEGREE = 14


def _is_zero(x, tol=ZERO_TOL):
    x = np.asarray(x)
    if x.dtype == object:
        return not any(bool(c) for c in x.ravel())
    return bool(np.all(np.abs(x) <= tol * max(1.0, float(np.abs(x).max()) if x.size else 1.0)))


class Mask:
    """Refinement mask: a square matrix of trigonometric polynomials.

    Parameters
    ----------
    P : TrigPolyMatrix, optional
        Full mask.
    jets : dict, optional
        ``{alpha: D^alpha P(0)}`` for masks known only through their jets
        at the origin (all missing jets are zero).
    d : int, optional
        Dimension; required with ``jets``.
    """

    def __init__(self, P=None, jets=None, d=None):
        if (P is None) == (jets is None):
            raise InputError("give either a trigonometric mask or its jets at the origin")
        self.P = P
        if P is not None:
            if P.rows != P.cols:
                raise InputError("a mask must be square")
            self.d = P.d
            self.r = P.rows
            self.exact = P.exact
            self._jets = None
        else:
            if d is None:
                d = len(next(iter(jets)))
            self.d = d
            self._jets = {tuple(a): to_exact_array(np.atleast_2d(np.asarray(m, dtype=object)))
                          if _exactish(m) else np.atleast_2d(np.asarray(m, dtype=complex))
                          for a, m in jets.items()}
            zero = mi.zero(d)
            if zero not in self._jets:
                raise InputError("jets must include P(0)")
            self.r = self._jets[zero].shape[0]
            self.exact = all(m.dtype == object for m in self._jets.values())
        self._P0 = None

    # construction ----------------------------------------------------
    @classmethod
    def scalar(cls, coeffs, d=1):
        return cls(TrigPolyMatrix.scalar(coeffs, d))

    @classmethod
    def diag(cls, *masks):
        """Block-diagonal mask from scalar (or square) masks."""
        d = masks[0].d
        r = sum(m.r for m in masks)
        C = {}
        off = 0
        for m in masks:
            for j, c in m.P.coeffs.items():
                if j not in C:
                    C[j] = exact_zeros((r, r)) if all(mm.exact for mm in masks) else np.zeros((r, r), complex)
                C[j][off:off + m.r, off:off + m.r] = c
            off += m.r
        return cls(TrigPolyMatrix(C, d, (r, r)))

    def __mul__(self, c):
        if self.P is None:
            return Mask(jets={a: m * c for a, m in self._jets.items()}, d=self.d)
        return Mask(self.P * c)

    __rmul__ = __mul__

    @property
    def jets_only(self):
        return self.P is None

    # values and jets ---------------------------------------------------
    @property
    def P0(self):
        if self._P0 is None:
            self._P0 = self.jets0(0, self.exact)[mi.zero(self.d)]
        return self._P0

    def spectrum(self):
        """Eigenvalues of P(0), sorted by modulus."""
        ev = np.linalg.eigvals(to_complex_array(self.P0))
        return ev[np.argsort(-np.abs(ev))]

    def __call__(self, omega):
        if self.P is None:
            raise InputError("the mask is only known through its jets at the origin")
        return self.P(omega)

    def jets0(self, K, exact=None):
        """``{alpha: D^alpha P(0)}`` for ``|alpha| <= K``."""
        exact = self.exact if exact is None else exact
        if self.P is None:
            out = {}
            for a in mi.graded(self.d, K):
                m = self._jets.get(a)
                if m is None:
                    m = exact_zeros((self.r, self.r)) if exact else np.zeros((self.r, self.r), complex)
                out[a] = m if exact else to_complex_array(m)
            return out
        J = self.P.jet_at(np.zeros(self.d), K, exact=exact)
        return {a: J.coeffs[:, :, i] for i, a in enumerate(J.indices)}

    def jet_at(self, p, K, exact=None):
        """Jet of P at ``p`` with lead shape ``(r, r)``."""
        p = np.asarray(p, dtype=float)
        if self.P is None:
            if np.any(p != 0):
                raise InputError("the mask is only known through its jets at the origin")
            J = self.jets0(K, exact)
            c = np.stack([J[a] for a in mi.graded(self.d, K)], axis=-1)
            return TaylorJet(c, p, K)
        return self.P.jet_at(p, K, exact=self.exact if exact is None else exact)

    def to_json(self):
        if self.P is None:
            return {"r": self.r, "d": self.d,
                    "jets": {mi.to_str(a): _mat_json(m) for a, m in self._jets.items()}}
        return {"r": self.r, "d": self.d, **self.P.to_json()}

    def __repr__(self):
        kind = "jets" if self.P is None else f"support={len(self.P.coeffs)}"
        return f"Mask(r={self.r}, d={self.d}, {kind})"


def _exactish(m):
    a = np.asarray(m, dtype=object)
    return all(isinstance(c, (int, Fraction, GaussianRational)) for c in a.ravel())


def _mat_json(m):
    c = to_complex_array(m)
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(c)]


def bspline_mask(k):
    """Scalar mask ``((1 + exp(-iw)) / 2)^k`` of the B-spline of order k."""
    k = int(k)
    if k < 1:
        raise InputError("B-spline order must be at least 1")
    return Mask.scalar({j: Fraction(comb(k, j), 2 ** k) for j in range(k + 1)})


def counterexample_mask():
    """Jets-only 3x3 bivariate mask with spectrum {1, 2, 4} at the origin."""
    P0 = [[1, 0, 0], [0, 2, 0], [0, -1, 4]]
    D01 = [[0, 0, 0], [0, 0, 0], [0, 0, 1]]
    return Mask(jets={(0, 0): P0, (0, 1): D01}, d=2)


# ---------------------------------------------------------------------------
# solution space

def dyadic_spectral_level(mask, tol=EIG_TOL):
    """Largest n >= 0 with 2^n an eigenvalue of P(0), or -1 when there is none."""
    ev = mask.spectrum()
    if not len(ev):
        return -1
    top = int(ceil(log2(max(np.abs(ev).max(), 1.0)))) + 1
    N = -1
    for n in range(top + 1):
        if np.any(np.abs(ev - 2.0 ** n) <= tol * 2.0 ** n):
            N = n
    return N


def _block_index(d, N, descending=False, start=0):
    return [a for a in mi.graded(d, N, descending) if sum(a) >= start]


def assemble_L(mask, N, descending=False, exact=None):
    """Matrix of ``(w_a) -> (2^|a| w_a - sum_{b <= a} D^(a-b)P(0) w_b)`` on Z_N.

    Blocks are stacked in graded-lex order (ascending within a degree
    unless ``descending``).  Returns ``(L, index)``.
    """
    exact = mask.exact if exact is None else exact
    idx = _block_index(mask.d, N, descending)
    pos = {a: i for i, a in enumerate(idx)}
    J = mask.jets0(N, exact)
    r = mask.r
    n = len(idx) * r
    L = exact_zeros((n, n)) if exact else np.zeros((n, n), complex)
    eye = np.eye(r, dtype=int)
    for a in idx:
        i = pos[a]
        L[i * r:(i + 1) * r, i * r:(i + 1) * r] = L[i * r:(i + 1) * r, i * r:(i + 1) * r] + 2 ** sum(a) * eye
        for b in mi.below(a):
            j = pos[b]
            L[i * r:(i + 1) * r, j * r:(j + 1) * r] = L[i * r:(i + 1) * r, j * r:(j + 1) * r] - J[mi.sub(a, b)]
    return L, idx


def _nullspace(L, exact):
    if exact:
        return [np.asarray(v, dtype=object) for v in exact_nullspace(L)]
    if L.size == 0:
        return []
    U, S, Vh = np.linalg.svd(L)
    tol = KERNEL_TOL * (S[0] if S.size and S[0] > 0 else 1.0)
    rank = int(np.sum(S > tol))
    return [Vh[i].conj() for i in range(rank, Vh.shape[0])]


@dataclass
class JetBlockVector:
    """Family ``(w_alpha)`` of r-vectors indexed by ``|alpha| <= N``."""

    N: int
    blocks: dict
    r: int
    d: int

    @property
    def exact(self):
        return any(np.asarray(v).dtype == object for v in self.blocks.values())

    def stacked(self, descending=False):
        return np.concatenate([self.blocks[a] for a in mi.graded(self.d, self.N, descending)])

    def to_complex(self):
        return JetBlockVector(self.N, {a: to_complex_array(v) for a, v in self.blocks.items()}, self.r, self.d)

    def to_json(self):
        return {mi.to_str(a): [[float(z.real), float(z.imag)] for z in to_complex_array(v)]
                for a, v in self.blocks.items()}


def extend_solution(w, mask, K):
    """Extend a kernel element of L to all ``|alpha| <= K``.

    Solves ``(2^|a| I - P(0)) w_a = sum_{b < a} D^(a-b)P(0) w_b`` degree by
    degree; the system is uniquely solvable above the dyadic level N.
    """
    exact = w.exact and mask.exact
    J = mask.jets0(K, exact)
    blocks = dict(w.blocks) if exact else {a: to_complex_array(v) for a, v in w.blocks.items()}
    r = mask.r
    eye = np.eye(r, dtype=int)
    for n in range(w.N + 1, K + 1):
        A = 2 ** n * eye - J[mi.zero(mask.d)]
        for a in mi.homogeneous(mask.d, n):
            rhs = exact_zeros(r) if exact else np.zeros(r, complex)
            for b in mi.below(a, strict=True):
                rhs = rhs + J[mi.sub(a, b)].dot(blocks[b])
            if exact:
                x = exact_solve(A.astype(object), rhs)
                if x is None:
                    raise SingularExtension(f"2^{n} is an eigenvalue of P(0)")
            else:
                A_ = A.astype(complex)
                if np.linalg.cond(A_) > 1e12:
                    raise SingularExtension(f"2^{n} is (numerically) an eigenvalue of P(0)")
                x = np.linalg.solve(A_, rhs)
            blocks[a] = x
    return JetBlockVector(K, blocks, r, mask.d)


class RefinableVector(GeneratorVector):
    """A solution Phi of the refinement equation, evaluated through its mask.

    ``Phi(w) = P(w/2) ... P(w/2^n) Phi(w/2^n)`` with ``|w|/2^n`` small and the
    last factor taken from the Taylor series at the origin.
    """

    def __init__(self, mask, jets, label="Phi", decay=None):
        self.mask = mask
        self.jets = jets  # JetBlockVector at 0, degree K
        self.d = mask.d
        self._c0 = np.stack([to_complex_array(jets.blocks[a]) for a in mi.graded(self.d, jets.N)], axis=-1)
        self.labels = [f"{label}[{i}]" for i in range(mask.r)]
        self.entries = [None] * mask.r
        self._decay = decay

    @property
    def r(self):
        return self.mask.r

    @property
    def K(self):
        return self.jets.N

    @property
    def decay(self):
        if self._decay is None:
            self._decay = self._estimate_decay()
        return self._decay

    def _estimate_decay(self):
        rng = np.random.default_rng(7)
        dirs = rng.normal(size=(6, self.d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        rad = 2.0 ** np.arange(4, 10)
        vals = []
        for t in rad:
            pts = t * dirs + rng.uniform(-1, 1, size=dirs.shape)
            vals.append(np.abs(self(pts)).max())
        vals = np.array(vals)
        if np.all(vals <= 0):
            return np.inf
        fit = fit_power_law(rad, np.maximum(vals, 1e-300), n_fit=4)
        return max(0.0, -fit.slope - 0.25)

    def at_origin(self):
        return self._c0[:, 0]

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        if self.d == 1 and (omega.ndim == 0 or omega.shape[-1] != 1):
            omega = omega[..., None]
        shape = omega.shape[:-1]
        w = omega.reshape(-1, self.d)
        nrm = np.linalg.norm(w, axis=1)
        n = np.where(nrm > EVAL_RADIUS, np.ceil(np.log2(np.maximum(nrm, EVAL_RADIUS) / EVAL_RADIUS)), 0).astype(int)
        x = w / (2.0 ** n)[:, None]
        E = mi.exponent_array(self.d, self.K)
        mon = np.prod(x[:, None, :] ** E[None], axis=-1)
        val = mon @ self._c0.T  # (npts, r)
        for m in range(int(n.max()) if n.size else 0, 0, -1):
            sel = n >= m
            if not np.any(sel):
                continue
            Pm = self.mask(w[sel] / 2.0 ** m)
            val[sel] = np.einsum("nij,nj->ni", Pm, val[sel])
        return val.reshape(shape + (self.r,))

    def jet(self, p, K, exact=False):
        """Degree-K jet of Phi at p (lead ``(r,)``); exact only at the origin."""
        p = np.asarray(p, dtype=float).reshape(self.d)
        if np.all(p == 0):
            if K > self.K:
                raise InputError(f"solution jets were extended to degree {self.K} only")
            c = np.stack([self.jets.blocks[a] for a in mi.graded(self.d, K)], axis=-1)
            jt = TaylorJet(c, p, K)
            return jt if (exact and jt.exact) else jt.to_complex()
        nrm = float(np.linalg.norm(p))
        m = max(0, int(ceil(log2(nrm / EVAL_RADIUS))))
        q = p / 2 ** m
        c = taylor_shift(self._c0, self.d, self.K, q, K)
        cur = TaylorJet(c, q, K).scale_variables(2.0 ** -m)
        for j in range(m, 0, -1):
            Pj = self.mask.jet_at(p / 2 ** j, K, exact=False).scale_variables(2.0 ** -j)
            cur = jet_matmul(Pj, cur)
        return cur.with_base(p)

    def zero_order_at(self, p, K):
        return self.jet(p, K).zero_order()

    def __repr__(self):
        return f"RefinableVector(r={self.r}, d={self.d}, K={self.K})"


@dataclass
class SolutionBasis:
    """Basis of R(P) through the jets of its elements at the origin."""

    mask: Mask
    N: int
    kernel: list
    extended: list
    K: int
    solutions: list = field(default_factory=list)

    @property
    def dim(self):
        return len(self.kernel)

    def residuals(self, K=None):
        """Max defect of the two-scale jet relation for each extended element."""
        K = K or self.K
        J = self.mask.jets0(K, False)
        out = []
        for w in self.extended:
            wc = w.to_complex().blocks
            worst = 0.0
            for a in mi.graded(self.mask.d, K):
                lhs = 2 ** sum(a) * wc[a]
                rhs = sum(J[mi.sub(a, b)] @ wc[b] for b in mi.below(a))
                worst = max(worst, float(np.abs(lhs - rhs).max()))
            out.append(worst)
        return out

    def growth_constant(self, K=10):
        """Smallest A with ``|w_a| a! <= A^|a|`` for ``1 <= |a| <= K``."""
        A = 0.0
        for w in self.extended:
            for a, v in w.blocks.items():
                n = sum(a)
                if 1 <= n <= min(K, w.N):
                    val = float(np.abs(to_complex_array(v)).max()) * mi.factorial(a)
                    if val > 0:
                        A = max(A, val ** (1.0 / n))
        return A

    def to_dict(self):
        return {"N": self.N, "dim": self.dim, "K": self.K,
                "kernel": [w.to_json() for w in self.kernel]}


def solve_R(mask, K=WORK_DEGREE, exact=None, orthonormal=None):
    """Solution space R(P) as the kernel of L, extended to degree K.

    In exact mode the kernel basis is rational with a unit pivot; in float
    mode it is orthonormal.

    Raises
    ------
    ZeroSolutionOnly
        When no power of two is an eigenvalue of P(0), or L is injective.
    """
    N = dyadic_spectral_level(mask)
    if N < 0:
        raise ZeroSolutionOnly("P(0) has no eigenvalue 2^n, n >= 0")
    exact = mask.exact if exact is None else exact
    L, idx = assemble_L(mask, N, exact=exact)
    ker = _nullspace(L, exact)
    if not ker:
        raise ZeroSolutionOnly("the jet map L is injective")
    if not exact and (orthonormal is None or orthonormal):
        Q, _ = np.linalg.qr(np.stack(ker, axis=1))
        ker = [Q[:, i] for i in range(Q.shape[1])]
    r = mask.r
    kernel = []
    for v in ker:
        if exact:
            piv = next(c for c in v if c)
            v = np.array([c / piv for c in v], dtype=object)
        kernel.append(JetBlockVector(N, {a: v[i * r:(i + 1) * r] for i, a in enumerate(idx)}, r, mask.d))
    K = max(K, N)
    extended = [extend_solution(w, mask, K) for w in kernel]
    sols = [RefinableVector(mask, e, f"Phi{i + 1}") for i, e in enumerate(extended)] if not mask.jets_only else []
    return SolutionBasis(mask, N, kernel, extended, K, sols)


# ---------------------------------------------------------------------------
# range membership for the L_0 / L_j maps

def layer_maps(mask, N=None, descending=False):
    """The maps L_0 and L_{e_j} on the blocks ``1 <= |alpha| <= N``.

    ``L_0 w_a = (2^|a| - P(0)) w_a - sum_{0 < b < a} D^(a-b)P(0) w_b``;
    ``L_{e_j}`` keeps only ``b >= e_j`` and acts as the identity on blocks
    with ``a`` not above ``e_j``.
    """
    N = dyadic_spectral_level(mask) if N is None else N
    d, r = mask.d, mask.r
    J = {a: to_complex_array(m) for a, m in mask.jets0(N, False).items()}
    idx = _block_index(d, N, descending, start=1)
    pos = {a: i for i, a in enumerate(idx)}
    n = len(idx) * r
    eye = np.eye(r)

    def build(ej):
        M = np.zeros((n, n), complex)
        for a in idx:
            i = pos[a]
            sl = slice(i * r, (i + 1) * r)
            if ej is not None and not mi.leq(ej, a):
                M[sl, sl] = eye
                continue
            M[sl, sl] = 2 ** sum(a) * eye - J[mi.zero(d)]
            for b in idx:
                if b != a and mi.leq(b, a) and (ej is None or mi.leq(ej, b)):
                    M[sl, pos[b] * r:(pos[b] + 1) * r] -= J[mi.sub(a, b)]
        return M

    maps = {"0": build(None)}
    for j in range(d):
        e = mi.unit(d, j)
        maps[mi.to_str(e)] = build(e)
    return maps, idx


def range_residual(A, w):
    """Least-squares distance from w to the range of A."""
    x, *_ = np.linalg.lstsq(A, w, rcond=None)
    return float(np.linalg.norm(A @ x - w))


def range_membership(mask=None, vector=None, N=None, conventions=("ascending", "descending"), tol_in=1e-8):
    """Membership of a stacked vector in the ranges of the adjoint layer maps.

    ``vector`` maps block multi-indices to r-vectors (missing blocks are
    zero); by default it is the vector with ``(0, 0, 2)`` in the ``(0, 1)``
    block used with ``counterexample_mask``.  Each convention is reported
    separately.
    """
    mask = mask or counterexample_mask()
    if vector is None:
        vector = {(0, 1): [0, 0, 2]}
    out = {}
    for conv in conventions:
        maps, idx = layer_maps(mask, N, descending=(conv == "descending"))
        r = mask.r
        w = np.zeros(len(idx) * r, complex)
        for a, v in vector.items():
            i = idx.index(tuple(a))
            w[i * r:(i + 1) * r] = v
        res = {name: range_residual(M.conj().T, w) for name, M in maps.items()}
        out[conv] = {
            "blocks": [mi.to_str(a) for a in idx],
            "residuals": res,
            "in_range": {k: bool(v <= tol_in) for k, v in res.items()},
        }
    return out


# ---------------------------------------------------------------------------
# Condition Z_k and sum rules

def corners(d):
    return [tuple(l) for l in itertools.product((0, 1), repeat=d)]


def as_trig_vector(v, r, d):
    """Accept a TrigPolyMatrix (r x 1) or a list of scalar trig polynomials."""
    if isinstance(v, TrigPolyMatrix):
        if v.shape == (1, r) and r != 1:
            v = v.T
        if v.shape != (r, 1):
            raise InputError(f"v must be an {r} x 1 trigonometric vector")
        return v
    if isinstance(v, (list, tuple)) and len(v) == r:
        return TrigPolyMatrix.from_entries([[e] for e in v], d)
    raise InputError("cannot interpret v as a trigonometric vector")


@dataclass
class ZkReport:
    passed: bool
    k: int
    orders: dict
    reason: str = ""

    def to_dict(self):
        return {"passed": self.passed, "k": self.k, "reason": self.reason,
                "orders": {str(l): int(o) for l, o in self.orders.items()}}


def _v_at_origin_zero(v):
    val = v.jet_at(np.zeros(v.d), 0, exact=v.exact).coeffs[..., 0]
    return _is_zero(val)


def condition_Zk(mask, v, k):
    """Condition Z_k: ``v*(2.)P - delta_{l,0} v*`` vanishes to order k at each ``pi*l``.

    Returns a ZkReport with the zero order found at every corner l.  A
    vector with ``v(0) = 0`` fails with reason ``Degenerate_v``.
    """
    v = as_trig_vector(v, mask.r, mask.d)
    if mask.jets_only:
        raise InputError("Condition Z_k needs the full mask")
    if _v_at_origin_zero(v):
        return ZkReport(False, k, {}, "Degenerate_v")
    exact = mask.exact and v.exact
    vs = v.dual()
    vs2 = vs.dilate(2)
    orders = {}
    for l in corners(mask.d):
        p = pi * np.array(l, dtype=float)
        Jv2 = vs2.jet_at(p, k, exact=exact)
        JP = mask.jet_at(p, k, exact=exact)
        J = jet_matmul(Jv2, JP)
        if not any(l):
            J = J - vs.jet_at(p, k, exact=exact)
        orders[l] = J.zero_order()
    passed = all(o >= k for o in orders.values())
    return ZkReport(passed, k, orders, "" if passed else "order below k")


def _row_jets(v, K, exact):
    """Jets at 0 of the row ``v*`` (entries as r-vectors)."""
    J = v.dual().jet_at(np.zeros(v.d), K, exact=exact)
    return {a: J.coeffs[0, :, i] for i, a in enumerate(J.indices)}


def _sum_rules_v2(mask, v, k, exact):
    d, r = mask.d, mask.r
    uj = _row_jets(v, k - 1, exact)
    ok = True
    for l in corners(d):
        JP = mask.jet_at(pi * np.array(l, dtype=float), k - 1, exact=exact)
        DP = {a: JP.coeffs[:, :, i] for i, a in enumerate(JP.indices)}
        for a in mi.graded(d, k - 1):
            lhs = exact_zeros(r) if exact else np.zeros(r, complex)
            for b in mi.below(a):
                g = mi.sub(a, b)
                lhs = lhs + 2 ** sum(g) * uj[g].dot(DP[b])
            if not any(l):
                lhs = lhs - uj[a]
            if not _is_zero(lhs):
                ok = False
    return ok


def _mono_value(gamma, x):
    """``()^gamma`` at an integer point, exactly."""
    num = 1
    for g, t in zip(gamma, x):
        num *= t ** g
    return Fraction(num, mi.factorial(gamma))


def _sum_rules_v1(mask, v, k, exact):
    """Fourier-coefficient form of the sum rules.

    Write ``v*(w) = sum_c w_c exp(i c.w)`` and ``P = sum_j P_j exp(-i j.w)``.
    For every corner l and every ``q = ()^gamma``, ``|gamma| < k``:
    ``sum_s sum_c w_{s-c} P_{l+2s} q(l+2c) = 2^-d sum_c w_{-c} q(c)``.
    """
    d, r = mask.d, mask.r
    vs = v.dual()  # 1 x r, coefficients of v*
    W = {j: vs.coeffs[j][0] for j in vs.coeffs}
    Pc = mask.P.coeffs
    conv = (lambda c: c) if exact else to_complex_array
    zero_vec = (lambda: exact_zeros(r)) if exact else (lambda: np.zeros(r, complex))
    scale = Fraction(1, 2 ** d)
    ok = True
    for l in corners(d):
        # s ranges over indices with l + 2s in the support of P
        S = [tuple((j[t] - l[t]) // 2 for t in range(d)) for j in Pc
             if all((j[t] - l[t]) % 2 == 0 for t in range(d))]
        for gamma in mi.graded(d, k - 1):
            lhs = zero_vec()
            for s in S:
                Pls = conv(Pc[tuple(l[t] + 2 * s[t] for t in range(d))])
                for key, wv in W.items():
                    c = tuple(s[t] + key[t] for t in range(d))  # s - c = -key
                    q = _mono_value(gamma, [l[t] + 2 * c[t] for t in range(d)])
                    qv = GaussianRational(q) if exact else float(q)
                    lhs = lhs + qv * conv(wv).dot(Pls)
            rhs = zero_vec()
            for key, wv in W.items():
                q = _mono_value(gamma, key)
                rhs = rhs + (GaussianRational(q * scale) if exact else float(q * scale)) * conv(wv)
            if not _is_zero(lhs - rhs):
                ok = False
    return ok


def sum_rules_check(mask, v, k, version=2):
    """Sum rules of the first (Fourier coefficients) or second (jets) kind."""
    v = as_trig_vector(v, mask.r, mask.d)
    if mask.jets_only:
        raise InputError("sum rules need the full mask")
    if k < 1:
        return True
    if _v_at_origin_zero(v):
        return False
    exact = mask.exact and v.exact
    if version == 2:
        return _sum_rules_v2(mask, v, k, exact)
    if version == 1:
        return _sum_rules_v1(mask, v, k, exact)
    raise InputError("version must be 1 or 2")


def _zk_system(mask, k, exact):
    """Linear system in the stacked jets ``u^a`` of the row ``u = v*``, ``|a| < k``."""
    d, r = mask.d, mask.r
    idx = mi.graded(d, k - 1)
    pos = {a: i for i, a in enumerate(idx)}
    rows = []
    for l in corners(d):
        JP = mask.jet_at(pi * np.array(l, dtype=float), k - 1, exact=exact)
        DPs = {a: JP.coeffs[:, :, i].T for i, a in enumerate(JP.indices)}
        for a in idx:
            block = exact_zeros((r, r * len(idx))) if exact else np.zeros((r, r * len(idx)), complex)
            for b in mi.below(a):
                g = mi.sub(a, b)
                j = pos[g]
                block[:, j * r:(j + 1) * r] = block[:, j * r:(j + 1) * r] + 2 ** sum(g) * DPs[b]
            if not any(l):
                j = pos[a]
                block[:, j * r:(j + 1) * r] = block[:, j * r:(j + 1) * r] - np.eye(r, dtype=int)
            rows.append(block)
    return np.concatenate(rows, axis=0), idx


def realize_jets(jets, d, r, k, exact):
    """Trigonometric vector on ``{j >= 0 : |j| < k}`` with prescribed jets at 0."""
    idx = mi.graded(d, k - 1)
    supp = idx  # the simplex of exponents doubles as the support
    n = len(idx)
    V = exact_zeros((n, n)) if exact else np.zeros((n, n), complex)
    for i, a in enumerate(idx):
        for j, s in enumerate(supp):
            val = fourier_monomial(s, a)
            V[i, j] = val if exact else complex(val)
    C = {}
    cols = []
    for comp in range(r):
        rhs = np.array([jets[a][comp] for a in idx], dtype=object if exact else complex)
        if exact:
            x = exact_solve(V, rhs)
        else:
            x = np.linalg.solve(V, rhs)
        cols.append(x)
    for j, s in enumerate(supp):
        m = exact_zeros((r, 1)) if exact else np.zeros((r, 1), complex)
        for comp in range(r):
            m[comp, 0] = cols[comp][j]
        if not _is_zero(m):
            C[s] = m
    return TrigPolyMatrix(C, d, (r, 1), exact)


@dataclass
class ZkSolution:
    k: int
    jets: dict
    v: TrigPolyMatrix = None

    def to_dict(self):
        return {"k": self.k,
                "jets": {mi.to_str(a): [[float(z.real), float(z.imag)] for z in to_complex_array(x)]
                         for a, x in (self.jets or {}).items()},
                "v": self.v.to_json() if self.v is not None else None}


def max_Zk_solve(mask, k_max=4, solutions=None):
    """Largest k <= k_max for which some v satisfies Condition Z_k.

    The second-kind sum rules are linear in the jets ``u^a = D^a v*(0)``;
    for each k the nullspace is computed (exactly for exact masks) and an
    element with ``u^0 != 0`` is kept.  With ``solutions`` (a
    SolutionBasis) the element maximizing ``|v(0)* Phi(0)|`` over the basis
    is preferred.  Returns a ZkSolution with ``k = 0`` and no v when even
    Z_1 fails.
    """
    exact = mask.exact
    r = mask.r
    best = ZkSolution(0, None, None)
    for k in range(1, k_max + 1):
        A, idx = _zk_system(mask, k, exact)
        ker = _nullspace(A, exact)
        cands = [x for x in ker if not _is_zero(x[:r])]
        if not cands:
            break
        pick = cands[0]
        if solutions is not None and solutions.dim:
            phi0 = [to_complex_array(e.blocks[mi.zero(mask.d)]) for e in solutions.extended]

            def score(x):
                x0 = to_complex_array(x[:r])
                x0 = x0 / np.linalg.norm(x0)
                return max(abs(np.dot(x0, p)) for p in phi0)
            pick = max(cands, key=score)
        if not exact:
            pick = pick / np.linalg.norm(pick[:r])
        jets = {a: pick[i * r:(i + 1) * r] for i, a in enumerate(idx)}
        v = realize_jets(jets, mask.d, r, k, exact).dual().T
        best = ZkSolution(k, jets, v)
    return best


# ---------------------------------------------------------------------------
# coherent orders

def combined_gramian(basis, omega, s=0.0, cfg=None):
    """Sum of the Gramians of all basis solutions.

    Returns a GramianSample whose ``b`` holds one column ``|w|^s Phi_j(w)``
    per solution, so that ``G = G0 + b b*``.
    """
    if not basis.solutions:
        raise InputError("combined Gramians need a full mask")
    G = G0 = None
    cols = []
    tail = 0.0
    R = 0
    for phi in basis.solutions:
        gs = gramian(phi, omega, s, cfg)
        G = gs.G if G is None else G + gs.G
        G0 = gs.G0 if G0 is None else G0 + gs.G0
        cols.append(gs.b)
        tail += gs.tail
        R = max(R, gs.radius)
    return GramianSample(gs.omega, G, G0, np.stack(cols, axis=-1), tail, R)


def coherent_order(basis, s=0.0, cfg=None, radii=DEFAULT_RADII, directions=None):
    """Pencil decay fit for the combined Gramian, plus supervector samples.

    Returns a dict with ``fit`` (DecayFit), ``samples`` (points and the
    minimizing vectors), and regularity flags: ``degenerate`` when every
    solution has ``Phi(0) = 0``; ``regular`` when ``v*Gv |w|^-2s`` stays
    within two decades along the samples.
    """
    cfg = cfg or BracketConfig(s=s)
    d = basis.mask.d

    def f(w):
        gs = combined_gramian(basis, w, s, cfg)
        lam, _ = pencil_min(gs.G0, gs.b)
        return lam * _weights(w, s)

    fit = radial_fit(f, d, radii, directions)
    degenerate = all(_is_zero(to_complex_array(e.blocks[mi.zero(d)])) for e in basis.extended)
    if degenerate:
        warnings.warn("every solution vanishes at the origin", DegenerateWarning, stacklevel=2)
    pts = np.array(radii)[:, None] * np.ones((1, d)) / np.sqrt(d)
    gs = combined_gramian(basis, pts, s, cfg)
    try:
        lam, V = pencil_min(gs.G0, gs.b)
    except NullPencil:
        lam, V = np.full(len(pts), np.nan), np.full((len(pts), basis.mask.r), np.nan)
    full = np.einsum("ni,nij,nj->n", V.conj(), gs.G, V).real / _weights(pts, s)
    trunc = np.einsum("ni,nij,nj->n", V.conj(), gs.G0, V).real
    finite = np.all(np.isfinite(full)) and np.all(full > 0)
    regular = bool(finite and full.max() / full.min() <= 100.0 and not degenerate)
    return {
        "fit": fit,
        "order": fit.order,
        "samples": {"points": pts, "vectors": V, "vGv_scaled": full, "vG0v": trunc},
        "degenerate": bool(degenerate),
        "regular": regular,
    }


def quadratic_form_fit(basis, v, s=0.0, cfg=None, radii=DEFAULT_RADII, directions=None):
    """Fit the zero order at 0 of ``w -> v(w)* G0(w) v(w)`` for the combined Gramian."""
    v = as_trig_vector(v, basis.mask.r, basis.mask.d)

    def f(w):
        gs = combined_gramian(basis, w, s, cfg)
        u = v.dual()(w)[..., 0, :]
        return np.einsum("ni,nij,nj->n", u, gs.G0, u.conj()).real

    return radial_fit(f, basis.mask.d, radii, directions)


def flatten_mask(mask, k):
    """Jets of T with ``P T = T(2.) + O(|w|^k)`` and ``T(0) = I``.

    Solves ``(2^|a| - 1) T_a = sum_{b < a} D^(a-b)P(0) T_b`` degree by
    degree.  Returns ``{alpha: T_alpha}`` for ``|alpha| < k``.

    Raises
    ------
    AssumptionViolated
        When ``P(0) != I``.
    """
    exact = mask.exact
    r = mask.r
    J = mask.jets0(max(k - 1, 0), exact)
    I = np.eye(r, dtype=int)
    if not _is_zero(J[mi.zero(mask.d)] - I):
        raise AssumptionViolated("flattening requires P(0) = I")
    T = {mi.zero(mask.d): (I.astype(object) * GaussianRational(1)) if exact else I.astype(complex)}
    for a in mi.graded(mask.d, k - 1)[1:]:
        acc = exact_zeros((r, r)) if exact else np.zeros((r, r), complex)
        for b in mi.below(a, strict=True):
            acc = acc + J[mi.sub(a, b)].dot(T[b])
        fac = 2 ** sum(a) - 1
        T[a] = acc * GaussianRational(Fraction(1, fac)) if exact else acc / fac
    return T


def flatten_residual_order(mask, T, k):
    """Zero order at 0 of ``P T - T(2.)`` from the jets T (degree k-1)."""
    d, r = mask.d, mask.r
    K = k - 1
    exact = mask.exact and all(np.asarray(t).dtype == object for t in T.values())
    idx = mi.graded(d, K)
    c = np.stack([T[a] for a in idx], axis=-1)
    JT = TaylorJet(c, np.zeros(d), K)
    JT2 = JT.scale_variables(2)
    JP = mask.jet_at(np.zeros(d), K, exact=exact)
    if not exact:
        JT, JT2 = JT.to_complex(), JT2.to_complex()
    R = jet_matmul(JP, JT) - JT2
    return R.zero_order()


def universal_quasi_interp(mask, v, k, index=0, basis=None):
    """Polynomial reproduction report for ``psi = v* Phi`` with Phi in R(P).

    Moments of psi come from the jets of v and Phi at the origin; the
    reproduction check is delegated to the quasi-interpolation module.
    Surjectivity onto polynomials of degree < k holds iff
    ``v(0)* Phi(0) != 0``.
    """
    from .quasi_interp import qi_from_jet
    v = as_trig_vector(v, mask.r, mask.d)
    basis = basis or solve_R(mask, K=max(WORK_DEGREE, k))
    ext = basis.extended[index]
    exact = mask.exact and v.exact and ext.exact
    K = k
    vj = v.dual().jet_at(np.zeros(mask.d), K, exact=exact)  # 1 x r
    cphi = np.stack([ext.blocks[a] for a in mi.graded(mask.d, K)], axis=-1)
    Jphi = TaylorJet(cphi if exact else to_complex_array(cphi), np.zeros(mask.d), K)
    if not exact:
        vj = vj.to_complex()
    psi = jet_matmul(vj, Jphi)[0]
    psi0 = psi.coeffs[0]
    surj = not _is_zero(np.array([psi0]))
    report = {"k": k, "index": index, "psi_at_origin": complex(psi0), "surjective": surj}
    if not surj:
        report["note"] = "v(0)* Phi(0) = 0: the scheme does not reach all polynomials of degree < k"
        return report
    scheme = qi_from_jet(psi, k)
    report["scheme"] = scheme
    report["max_residual"] = scheme.max_residual
    return report


# ---------------------------------------------------------------------------
# random instances

def _rand_frac(rng, den=4, lo=-4, hi=4):
    return Fraction(int(rng.integers(lo, hi + 1)), den)


def _zk_mask_system(uj, supp, r, d, k):
    """Sum rules of the second kind as linear equations in the mask coefficients."""
    nunk = len(supp) * r * r
    rows, rhs = [], []
    for l in corners(d):
        for a in mi.graded(d, k - 1):
            for col in range(r):
                row = exact_zeros(nunk)
                val = GaussianRational(0)
                for b in mi.below(a):
                    g = mi.sub(a, b)
                    wv = [c * 2 ** sum(g) for c in uj[g]]
                    for si, jj in enumerate(supp):
                        # coefficient of P_jj[i, col] in D^b P(pi l)
                        mono = fourier_monomial(jj, b)
                        if sum(jt * lt for jt, lt in zip(jj, l)) % 2:
                            mono = -mono
                        for i in range(r):
                            u = (si * r + i) * r + col
                            row[u] = row[u] + wv[i] * mono
                if not any(l):
                    val = uj[a][col]
                rows.append(row)
                rhs.append(val)
    return np.array(rows, dtype=object), np.array(rhs, dtype=object)


def random_instance(rng, r=None, d=None, k=None, perturb=False):
    """Random exact (P, v, k) with P satisfying Condition Z_k for v.

    v has small rational coefficients on ``{0, 1}^d`` with ``v(0) != 0``;
    P is drawn from the affine space of masks on ``{0, .., k+1}^d`` (or
    ``{0, .., 2k}^d`` when that is infeasible) obeying the second-kind sum
    rules.  With ``perturb`` one coefficient is
    nudged so that the rules usually break.
    """
    r = r or int(rng.integers(1, 3))
    d = d or int(rng.integers(1, 3))
    k = k or int(rng.integers(1, 4))
    while True:
        C = {}
        for j in itertools.product((0, 1), repeat=d):
            C[j] = np.array([[GaussianRational(_rand_frac(rng, 2, -2, 2))] for _ in range(r)], dtype=object)
        v = TrigPolyMatrix(C, d, (r, 1), True)
        if not _v_at_origin_zero(v):
            break
    uj = _row_jets(v, k - 1, True)
    for width in (k + 2, 2 * k + 1):
        supp = list(itertools.product(range(width), repeat=d))
        nunk = len(supp) * r * r
        A, b = _zk_mask_system(uj, supp, r, d, k)
        sol = exact_affine_solve(A, b)
        if sol is not None:
            break
    x0, ker = sol
    x = np.array(x0, dtype=object)
    for kv in ker:
        t = _rand_frac(rng, 8, -2, 2)
        if t:
            x = x + np.array(kv, dtype=object) * GaussianRational(t)
    if perturb:
        u = int(rng.integers(0, nunk))
        x[u] = x[u] + GaussianRational(Fraction(1, 4))
    P = {}
    for si, jj in enumerate(supp):
        m = np.array(x[si * r * r:(si + 1) * r * r], dtype=object).reshape(r, r)
        if not _is_zero(m):
            P[jj] = m
    return Mask(TrigPolyMatrix(P, d, (r, r), True)), v, k

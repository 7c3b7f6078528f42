"""Estimator-style wrappers around the analyses.

The classes follow scikit-learn conventions (constructor keyword
parameters, ``get_params``/``set_params``/``clone`` support, ``fit``
returning ``self``, fitted attributes with a trailing underscore).  The
"training data" is a generator or a mask instead of a sample matrix, so
``fit`` takes that object directly and there is no ``predict``.
"""
from sklearn.base import BaseEstimator

from .generators import GeneratorVector, as_vector
from .ladder import BracketConfig, eig_upper_bound, fsi_order, psi_order, sf_order, superfunction_sample


def _cfg(est):
    return BracketConfig(s=est.s, lattice_radius=est.lattice_radius)


class PSIOrder(BaseEstimator):
    """Approximation order of a principal ladder.

    Parameters
    ----------
    s : float
        Sobolev exponent.
    lattice_radius : int, optional
    max_k : int
        Highest Strang-Fix order probed with jets.

    Attributes
    ----------
    order_ : float
    fit_ : DecayFit
    flags_ : dict
    sf_order_ : int
    """

    def __init__(self, s=0.0, lattice_radius=None, max_k=8):
        self.s = s
        self.lattice_radius = lattice_radius
        self.max_k = max_k

    def fit(self, phi, y=None):
        if isinstance(phi, GeneratorVector):
            phi = phi[0]
        self.sf_order_ = sf_order(phi, self.max_k)["order"]
        self.fit_, self.flags_ = psi_order(phi, self.s, _cfg(self))
        self.order_ = self.fit_.order
        return self


class FSIOrder(BaseEstimator):
    """Approximation order of a finitely generated ladder with its certificate.

    Parameters
    ----------
    s : float
    lattice_radius : int, optional
    index_set : list, optional
        Lattice points for the eigenvalue bound (actual coordinates).

    Attributes
    ----------
    order_, fit_, bound_, certified_
    """

    def __init__(self, s=0.0, lattice_radius=None, index_set=None):
        self.s = s
        self.lattice_radius = lattice_radius
        self.index_set = index_set

    def fit(self, Phi, y=None):
        Phi = as_vector(Phi)
        self.fit_ = fsi_order(Phi, self.s, _cfg(self))
        self.order_ = self.fit_.order
        self.bound_ = None
        if self.index_set is not None:
            self.bound_ = eig_upper_bound(Phi, self.index_set, self.s)["bound"]
        self.certified_ = superfunction_sample(Phi, self.s, _cfg(self))["certified"]
        return self


class MaskAnalyzer(BaseEstimator):
    """Solution space and maximal sum-rule order of a refinement mask.

    Attributes
    ----------
    N_, dim_, k_star_, v_, coherent_order_
    """

    def __init__(self, k_max=4, s=0.0, coherent=True):
        self.k_max = k_max
        self.s = s
        self.coherent = coherent

    def fit(self, mask, y=None):
        from .refinement import coherent_order, dyadic_spectral_level, max_Zk_solve, solve_R
        self.N_ = dyadic_spectral_level(mask)
        self.basis_ = solve_R(mask)
        self.dim_ = self.basis_.dim
        sol = max_Zk_solve(mask, self.k_max, self.basis_)
        self.k_star_, self.v_ = sol.k, sol.v
        self.coherent_order_ = None
        if self.coherent and self.basis_.solutions:
            self.coherent_order_ = coherent_order(self.basis_, self.s)["order"]
        return self


class EmpiricalOrder(BaseEstimator):
    """Slope of measured errors on a dyadic sweep.

    Attributes
    ----------
    curve_ : ErrorCurve
    order_ : float
    """

    def __init__(self, s=0.0, nodes=64, levels=(3, 8), fit_points=4):
        self.s = s
        self.nodes = nodes
        self.levels = levels
        self.fit_points = fit_points

    def fit(self, Phi, y=None):
        from .empirical import order_curve
        lo, hi = self.levels
        h = [2.0 ** -j for j in range(lo, hi + 1)]
        self.curve_ = order_curve(None, Phi, self.s, h, nodes=self.nodes, fit_points=self.fit_points)
        self.order_ = self.curve_.order
        return self

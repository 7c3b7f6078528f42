"""Rates at which dilated shift-invariant spaces approximate smooth functions.

Generators are described by their Fourier transforms; brackets, Gramians,
refinement masks and quasi-interpolants are all computed on the Fourier
side, with Taylor jets for removable singularities and exact
Gaussian-rational arithmetic where the inputs allow it.
"""
from .errors import (AnnulusDegenerate, AssumptionViolated, DegenerateAtOrigin, DegenerateSymbol,
                     DegenerateWarning, InconclusiveAtDegree, InputError, NullPencil, PreconditionFailed,
                     QuadratureWarning, SIApproxError, TailBoundWarning, ZeroSolutionOnly)
from .exact import GaussianRational
from .generators import (GeneratorVector, bad_pair, bad_pair_v, box221, boxspline, bspline, convolve, delta,
                         fredrickson, superfunction_symbol)
from .jet import TaylorJet
from .ladder import (BracketConfig, bracket, eig_upper_bound, fsi_order, gramian, psi_order,
                     psi_order_consistency, refinable_lower_bound, sf_order, superfunction_sample)
from .polynomial import Polynomial
from .trig import TrigPoly, TrigPolyMatrix

__version__ = "0.1.0"

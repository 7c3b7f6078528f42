"""Exception and warning types."""


class SIApproxError(Exception):
    """Base class for numerical and contract failures."""


class InputError(SIApproxError, ValueError):
    """Malformed generator, mask or configuration description."""


class NonRemovableSingularity(SIApproxError):
    pass


class DegreeExhausted(SIApproxError):
    pass


class NotExact(SIApproxError):
    """A jet cannot be represented with Gaussian-rational coefficients."""


class NotAnalytic(SIApproxError):
    """Jets were requested from a symbol that is not entire."""


class DegenerateDirections(SIApproxError):
    pass


class PreconditionFailed(SIApproxError):
    pass


class InconclusiveAtDegree(SIApproxError):
    pass


class DegenerateAtOrigin(SIApproxError):
    pass


class NullPencil(SIApproxError):
    pass


class AnnulusDegenerate(SIApproxError):
    pass


class ZeroSolutionOnly(SIApproxError):
    pass


class SingularExtension(SIApproxError):
    pass


class AssumptionViolated(SIApproxError):
    pass


class DegenerateSymbol(SIApproxError):
    pass


class TailBoundWarning(UserWarning):
    """Lattice truncation error may exceed the requested tolerance."""


class QuadratureWarning(UserWarning):
    pass


class DegenerateWarning(UserWarning):
    pass

"""Exception hierarchy shared by all brownmap modules."""


class BrownmapError(Exception):
    """Base class for every error raised by this package."""


class MeasureSpecError(BrownmapError, ValueError):
    """A measure description violates its invariants or is malformed."""


class PoleAtAtom(BrownmapError, ArithmeticError):
    """Evaluation point coincides with an atom of the measure on the real axis."""


class DivergentIntegral(BrownmapError, ArithmeticError):
    """An integral against the measure does not converge at the requested point."""


class NotInImage(BrownmapError):
    """Newton inversion found no preimage with positive delta (point not in M)."""


class JacobianSingular(BrownmapError, ArithmeticError):
    pass


class NegativeDensity(BrownmapError, ArithmeticError):
    pass


class EmptyBoundary(BrownmapError):
    """Level-set extraction found no sign change inside the window."""


class ComplexResult(BrownmapError, ArithmeticError):
    pass


class WindowMismatch(BrownmapError, ValueError):
    pass


class EigensolverFailure(BrownmapError):
    pass

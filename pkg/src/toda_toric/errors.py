"""Exception hierarchy.

Every numerical abort derives from :class:`NumericalAbort` so the CLI can map
it to a single exit code.
"""


class TodaToricError(Exception):
    """Base class for all errors raised by this package."""


class NumericalAbort(TodaToricError):
    """A computation could not be completed reliably."""


class ConvergenceError(NumericalAbort):
    pass


class SaturationError(NumericalAbort):
    """An exponential left the representable range (exponent above 700)."""


class StiffnessError(NumericalAbort):
    """Step size fell below the integrator floor."""


class QuadratureError(NumericalAbort):
    pass


class IllConditionedError(NumericalAbort):
    pass


class SpectralDegeneracyError(NumericalAbort):
    """Two Dirichlet eigenvalues coincide; the point must be resampled."""


class CornerDegeneracyError(NumericalAbort):
    """A billiard trajectory hits a face of codimension two or more."""


class OffLeafError(TodaToricError, ValueError):
    """Input does not lie on the requested symplectic leaf."""


class UnattainableSpectrumError(TodaToricError, ValueError):
    """No periodic Jacobi matrix on the leaf has the requested spectrum."""

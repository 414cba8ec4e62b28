"""Exception types raised across the package.

Numerical repairs (eigenvalue clips, trace renormalizations) are not
errors; they are counted and surfaced in results. Exceptions are reserved
for contract violations and genuine numerical breakdown.
"""


class ContmeasError(Exception):
    """Base class for all package errors."""


class NonHermitian(ContmeasError):
    """Matrix expected Hermitian exceeds the Hermiticity tolerance."""


class NonHermitianH(NonHermitian):
    """Model Hamiltonian is not Hermitian."""


class NotPSD(ContmeasError):
    """Matrix expected positive semidefinite has a negative eigenvalue."""


class ZeroTrace(ContmeasError):
    """Cannot normalize a matrix with nonpositive trace."""


class NonFinite(ContmeasError):
    """Input contains NaN or Inf entries."""


class BadShape(ContmeasError):
    """Model arrays have inconsistent dimensions or duplicate entries."""


class ZeroAmplitude(ContmeasError):
    """Jump channel amplitude z must be nonzero."""


class NonPositiveWeight(ContmeasError):
    """Jump channel weight nu must be positive."""


class NonPositiveB(ContmeasError):
    """Drift split scale b must be positive."""


class UnknownAmplitude(ContmeasError):
    """Requested jump amplitude z is not in the model's channel table."""


class DeadChannel(ContmeasError):
    """Jump outcome has zero probability from the given state."""


class RateTooHigh(ContmeasError):
    """Time step too coarse for the model's total jump rate."""


class StateCollapse(ContmeasError):
    """Trajectory weight underflowed below the representable floor."""


class SupportViolation(ContmeasError):
    """Support of the numerator state is not contained in the denominator's."""


class WrongMode(ContmeasError):
    """Operation applied to a trajectory of the wrong mode."""


class EmptySample(ContmeasError):
    """Estimator called on an empty sample."""


class TooFewSamples(ContmeasError):
    """Standard error needs at least two samples."""


class QuadratureFailure(ContmeasError):
    """Adaptive quadrature did not converge to the requested tolerance."""

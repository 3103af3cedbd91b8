"""Semantic exception hierarchy.

Public functions raise these instead of bare ValueError so callers can
distinguish contract violations (bad inputs) from runtime conditions
(missing samplers, infeasible rejection envelopes).
"""


class TwoScaleError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(TwoScaleError, ValueError):
    """An argument lies outside the domain of the Phi function in use."""


class UnsupportedPhiError(TwoScaleError):
    """The operation requires Legendre-type Phi (square or xlogx only)."""


class BadStepError(TwoScaleError, ValueError):
    """A step-size or integration-time parameter is out of range."""


class NotSPDError(TwoScaleError, ValueError):
    """A matrix expected to be symmetric positive-definite is not."""


class SamplerUnavailableError(TwoScaleError):
    """The conditional family has neither a sampler nor an analytic mean."""


class RejectionInfeasibleError(TwoScaleError):
    """The rejection envelope for a perturbed target cannot be certified."""


class NonUnitProbeError(TwoScaleError, ValueError):
    """A probe direction supplied to a criterion check is not unit norm."""


class LawUnavailableError(TwoScaleError):
    """No closed-form iterate law exists for the requested configuration."""


class BadConfigError(TwoScaleError, ValueError):
    """An experiment or chain configuration is invalid."""

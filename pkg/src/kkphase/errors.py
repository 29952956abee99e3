"""Exception types shared across the package."""


class KkphaseError(Exception):
    """Base class for all package-specific errors."""


class PoleEvaluation(KkphaseError):
    """Transfer-function evaluation requested too close to a pole."""


class IllConditioned(KkphaseError):
    """Polynomial construction would lose too many significant digits."""


class EmptyModeSet(KkphaseError):
    """No cavity mode satisfies the requested cutoff."""


class OutOfDomain(KkphaseError):
    """Field evaluation point lies outside the cavity."""


class DegenerateOutput(KkphaseError):
    """All source/observer couplings vanish; transfer function is zero."""


class GridTooCoarse(KkphaseError):
    """Quadrature error estimate exceeds the requested phase tolerance."""

    def __init__(self, message, omega=None, error_estimate=None):
        super().__init__(message)
        self.omega = omega
        self.error_estimate = error_estimate


class Undersampled(KkphaseError):
    """Time grid does not resolve the fastest oscillation present."""


class NonHermitianInput(KkphaseError):
    """Two-sided spectrum violates G(-jw) = conj(G(jw))."""


class WindowMismatch(KkphaseError):
    """Time signals overlap on less than 90% of their windows."""


class ConfigError(KkphaseError):
    """Run configuration failed schema or semantic validation."""

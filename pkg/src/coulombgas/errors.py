"""Exception types shared across the package."""


class CoulombGasError(Exception):
    """Base class for all package-specific errors."""


class DomainError(CoulombGasError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class UnsupportedOrderError(DomainError):
    """Bessel order outside the supported set {1, 2, 3}."""


class RegimeError(CoulombGasError, ValueError):
    """An expansion or formula was requested outside its regime of validity."""


class QuadratureConvergenceError(CoulombGasError, RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Carries the integrator's last error estimate in ``error_estimate``.
    """

    def __init__(self, message, error_estimate=None):
        super().__init__(message)
        self.error_estimate = error_estimate


class CalibrationError(CoulombGasError, RuntimeError):
    """Root bracketing or solving failed in a calibration equation."""


class InfeasibleAcceptanceError(CoulombGasError, RuntimeError):
    """Rejection sampler acceptance rate collapsed; the tilt needs recalibration."""


class InsufficientDataError(CoulombGasError, ValueError):
    """Too few samples to form the requested statistics."""


class ConfigError(CoulombGasError, ValueError):
    """Malformed experiment configuration input."""

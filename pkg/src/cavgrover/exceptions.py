"""Exception and warning types raised across the package."""


class CavGroverError(Exception):
    """Base class for all package errors."""


class InvalidSizeError(CavGroverError, ValueError):
    """Register size is not a positive integer."""


class InvalidParameterError(CavGroverError, ValueError):
    """A parameter violates its documented constraint."""


class SingularParameterError(InvalidParameterError):
    """Parameters hit a pole of the effective-model formulas (Delta = 0 or Delta = 2J)."""


class DegenerateCouplingError(InvalidParameterError):
    """Collective coupling vanishes, so the bright state is undefined."""


class RegimeError(InvalidParameterError):
    """Full-model run requested outside the adiabatic-elimination regime."""


class IntegrationError(CavGroverError, RuntimeError):
    """The ODE integrator failed (typically step-size underflow)."""

    def __init__(self, message, t_failed=None, status=None):
        super().__init__(message)
        self.t_failed = t_failed
        self.status = status


class ConfigError(CavGroverError, ValueError):
    """Run configuration is malformed; ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class RegimeWarning(UserWarning):
    """Full-model run proceeds outside the adiabatic-elimination regime."""

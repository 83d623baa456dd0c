"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Raised when system parameters violate a structural requirement."""


class ProtocolError(RuntimeError):
    """Raised when a request or response is malformed for the protocol."""


class BoundViolation(AssertionError):
    """Raised when a simulated run exceeds one of the analytic budgets."""

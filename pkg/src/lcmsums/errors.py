"""Exception types shared by the engines and the command line."""


class ConfigurationError(ValueError):
    """Unknown function name, unsupported arity, or out-of-range parameter."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ToleranceNotMetError(RuntimeError):
    """An adaptive product could not reach the requested tolerance within its caps."""

    def __init__(self, message, value, error_estimate):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class ResourceCapError(RuntimeError):
    """An enumeration would exceed its feasibility cap."""

    def __init__(self, message, max_feasible_x):
        super().__init__(message)
        self.max_feasible_x = max_feasible_x


class InvariantViolation(AssertionError):
    """An internal consistency check failed."""

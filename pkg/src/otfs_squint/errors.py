"""Exception types raised across the package."""


class ParameterError(ValueError):
    """Grid geometry or array shape does not match the declared parameters."""


class ConfigurationError(ValueError):
    """An experiment or channel configuration cannot be satisfied."""


class DomainError(ValueError):
    """A formula was evaluated outside the domain where it is defined."""


class WrongModelError(ValueError):
    """A coefficient model was passed to an operation that cannot use it."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance.

    The best available estimate and its error bound are attached so the
    caller can decide whether to use them anyway.
    """

    def __init__(self, message, estimate, abserr):
        super().__init__(message)
        self.estimate = estimate
        self.abserr = abserr

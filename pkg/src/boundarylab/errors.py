"""Exception types shared across the package."""


class BoundaryLabError(Exception):
    pass


class DomainError(BoundaryLabError, ValueError):
    """An evaluation was requested outside the valid domain of an object."""


class QuadratureError(BoundaryLabError):
    """A quadrature failed to reach the requested tolerance."""


class ConvergenceError(BoundaryLabError):
    """An iterative procedure exhausted its budget without converging."""


class MonotonicityError(BoundaryLabError):
    """A quantity that must be monotone was found not to be."""


class InfeasibleError(BoundaryLabError):
    """No parameter value satisfies the required condition."""


class ConfigError(BoundaryLabError, ValueError):
    """A configuration record failed validation."""

"""Exception types raised by the library."""


class InvalidArgument(ValueError):
    """A parameter is outside its admissible range."""


class UnestimableError(ValueError):
    """A measurement set carries no information about the requested parameters."""


class ConditioningError(ArithmeticError):
    """A covariance expected to be positive definite is not."""


class DegenerateDistribution(ValueError):
    """A quadratic form has no nonzero weights."""

"""Exception types raised across the package."""


class SparseAdaptError(Exception):
    """Base class for all package errors."""


class ParameterError(SparseAdaptError, ValueError):
    """A hyperparameter or configuration value is out of range."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class DimensionError(SparseAdaptError, ValueError):
    """Vector lengths do not agree."""


class NonFiniteInputError(SparseAdaptError, ValueError):
    """An input contains NaN or infinity."""


class DegenerateRegressorError(SparseAdaptError, ArithmeticError):
    """A normalized update was requested with an all-zero regressor."""


class DivergenceError(SparseAdaptError, ArithmeticError):
    """The filter estimate became non-finite."""

    def __init__(self, iteration):
        self.iteration = iteration
        super().__init__(f"estimate became non-finite at iteration {iteration}")

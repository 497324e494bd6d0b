"""Exception hierarchy shared by the library and the CLI."""


class RobustAmpError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(RobustAmpError, ValueError):
    """An argument lies outside the domain of the operation."""


class NumericalError(RobustAmpError, ArithmeticError):
    """A numerical routine failed to produce a trustworthy result."""


class QuadratureError(NumericalError):
    pass


class DivergenceError(NumericalError):
    """AMP produced a non-finite state."""

    def __init__(self, message, iteration=None, last_mse=None):
        super().__init__(message)
        self.iteration = iteration
        self.last_mse = last_mse


class DegeneratePotentialError(NumericalError):
    """The potential is flat (D = 1): no maximum is selected."""


class BracketError(RobustAmpError, ValueError):
    """A transition search bracket does not straddle a class change."""


class AmbiguousTransitionError(NumericalError):
    """The classification changes more than once inside a bracket."""

    def __init__(self, message, scan=None):
        super().__init__(message)
        self.scan = scan or []


class InstanceFormatError(RobustAmpError, IOError):
    """An instance file is corrupt, truncated or of the wrong version."""


class InstanceDimensionError(InstanceFormatError):
    """Header dimensions disagree with the stored payload."""


class MemoryBudgetError(RobustAmpError, MemoryError):
    """An instance would exceed the configured memory budget."""

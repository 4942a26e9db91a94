"""Exception hierarchy shared by all modules."""


class GapSpecError(Exception):
    """Base class for every error raised by the package."""


class EmptyOrders(GapSpecError, ValueError):
    pass


class FactorTooSmall(GapSpecError, ValueError):
    pass


class GroupTooLarge(GapSpecError, ValueError):
    pass


class GroupMismatch(GapSpecError, ValueError):
    pass


class NotReal(GapSpecError, ValueError):
    pass


class NonDividingBlock(GapSpecError, ValueError):
    pass


class BasisNotEnumerable(GapSpecError):
    pass


class EmptySet(GapSpecError, ValueError):
    pass


class PairNotSufficient(GapSpecError):
    pass


class NotCoordinated(GapSpecError):
    pass


class RangeViolation(GapSpecError, ValueError):
    pass


class ZeroFunction(GapSpecError):
    pass


class PartitionExhausted(GapSpecError):
    pass


class SpectrumExhausted(GapSpecError):
    pass


class NotConverged(GapSpecError):
    def __init__(self, message, residual=None, state=None):
        super().__init__(message)
        self.residual = residual
        self.state = state


class InvariantViolation(GapSpecError, AssertionError):
    """A construction invariant failed its numerical check."""


class ConfigError(ValueError):
    """A run configuration is malformed or inconsistent."""

"""Exception hierarchy shared by every ehkit module."""


class EHKitError(Exception):
    """Base class for all ehkit errors."""


class InvalidArgumentError(EHKitError, ValueError):
    pass


class DimensionMismatchError(EHKitError, ValueError):
    pass


class InvariantViolationError(EHKitError, ValueError):
    pass


class MapRangeError(EHKitError, ValueError):
    """A point map sent samples of ``cell`` outside its domain."""

    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class NumericalFailureError(EHKitError, RuntimeError):
    pass


class ConvergenceFailureError(NumericalFailureError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DecompositionAmbiguityError(NumericalFailureError):
    """Raised when cell sets or the permutation cannot be identified uniquely.

    ``distances`` holds the L1 distance table (rows: images P 1_{A_i},
    columns: candidate basis densities) when available.
    """

    def __init__(self, message, distances=None):
        super().__init__(message)
        self.distances = distances


class DecompositionMismatchError(NumericalFailureError):
    pass


class NoWeakLimitError(NumericalFailureError):
    def __init__(self, message, decay_curve=None):
        super().__init__(message)
        self.decay_curve = decay_curve


class HomogenizationViolationError(EHKitError):
    def __init__(self, message, limits=None):
        super().__init__(message)
        self.limits = limits


class InconclusiveScalingError(NumericalFailureError):
    def __init__(self, message, deviations=None):
        super().__init__(message)
        self.deviations = deviations

"""Exception hierarchy shared across the package."""


class GcnWisError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(GcnWisError, ValueError):
    """An argument violates a precondition (bad probability, size, shape spec)."""


class DimensionError(ParameterError):
    """An array argument has an incompatible shape."""


class GraphFormatError(GcnWisError):
    """A graph or network file could not be parsed; message carries line info."""


class ModelFormatError(GcnWisError):
    """A model file is truncated, version-mismatched, or shape-inconsistent."""


class NotIndependentError(GcnWisError):
    """A claimed independent set contains an adjacent pair."""

    def __init__(self, edge):
        self.edge = tuple(edge)
        super().__init__(f"nodes {self.edge[0]} and {self.edge[1]} are adjacent")


class BudgetExhaustedError(GcnWisError):
    """The exact solver ran out of budget; carries the incumbent, not certified."""

    def __init__(self, incumbent, gap):
        self.incumbent = incumbent
        self.gap = gap
        super().__init__(
            f"budget exhausted: incumbent value {incumbent.total_utility:.6g}, "
            f"not certified (remaining gap {gap:.6g})"
        )


class RatioError(GcnWisError):
    """Approximation ratio undefined (zero optimum) or above 1 (oracle bug)."""


class RewardError(GcnWisError):
    """Reward signal undefined (zero greedy baseline utility)."""


class NumericError(GcnWisError):
    """A numeric computation produced non-finite values."""


class TrainingDivergedError(NumericError):
    """Training hit a non-finite loss; carries the last finite checkpoint."""

    def __init__(self, message, checkpoint, history):
        self.checkpoint = checkpoint
        self.history = history
        super().__init__(message)

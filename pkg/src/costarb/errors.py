"""Exception types shared across the solver and harness."""


class CostarbError(Exception):
    """Base class for solver-specific failures."""


class InfeasibleBudgetError(CostarbError):
    """Even the cheapest-cost assignment exceeds the budget; no solution exists."""


class TightenTooLargeError(CostarbError):
    """Budget tightening left a non-positive working budget."""


class RepairBudgetExceededError(CostarbError):
    """Cycle repair could not reconnect within the budget.

    ``best_effort`` carries the completed (over-budget) arborescence so the
    caller can inspect how far the repair got before retrying with a larger
    tightening margin.
    """

    def __init__(self, message, best_effort=None):
        super().__init__(message)
        self.best_effort = best_effort


class SizeLimitError(CostarbError):
    """Exhaustive oracle invoked beyond its enumeration size cap."""


class AmbiguousRegimeError(CostarbError):
    """Parameters fall between the asymptotic regimes' guard bands."""


class LambdaRangeError(CostarbError):
    """Multiplier outside the range where the closed-form expectation is valid."""


class InstanceFormatError(CostarbError):
    """Instance file is missing, truncated, or structurally inconsistent."""

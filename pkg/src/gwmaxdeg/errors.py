"""Exception hierarchy shared across the package."""


class GWError(Exception):
    """Base class for all package-specific errors."""


class LawError(GWError, ValueError):
    """Offspring-law parameters violate the constructor contract."""


class RegimeError(GWError, ValueError):
    """Operation applied to a law of the wrong criticality class."""


class NullEventError(GWError, ValueError):
    """Conditioning on an event of probability zero."""


class BudgetExceededError(GWError, RuntimeError):
    """A sampler ran past its vertex budget."""

    def __init__(self, message, vertices=None):
        super().__init__(message)
        self.vertices = vertices


class TrialLimitError(GWError, RuntimeError):
    """Rejection sampling exceeded its trial allowance."""

    def __init__(self, message, trials=None, expected_trials=None):
        super().__init__(message)
        self.trials = trials
        self.expected_trials = expected_trials


class UndecidableError(GWError, RuntimeError):
    """A membership probe reached an unexpanded region of a partial tree."""

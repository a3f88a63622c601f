"""Exception hierarchy shared by all mmdist modules."""


class MMDistError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(MMDistError, ValueError):
    """Input violates a structural invariant (bad matrix, bad mass vector...)."""


class MarginalMismatchError(ValidationError):
    """Two couplings that must share a marginal do not."""


class InstanceTooLargeError(MMDistError):
    """An exhaustive routine was asked to exceed its configured budget."""

    def __init__(self, message: str, required: float | None = None, budget: float | None = None):
        super().__init__(message)
        self.required = required
        self.budget = budget


class UncertifiedInstanceError(MMDistError):
    """A certified answer was demanded on an instance we can only bound heuristically."""

"""Exception types shared by all modules.

Every computation error carries a stable snake_case ``code`` that the
command-line front end reports in its error JSON.
"""

from __future__ import annotations


class FrozenRDEError(Exception):
    """Base class for computation errors."""

    code = "computation_error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict:
        out = {"error": self.code, "message": self.message}
        out.update(self.details)
        return out


class NotScalable(FrozenRDEError):
    """The cumulative bound needed by a scaling map fails on the input."""

    code = "not_scalable"


class OutOfDomain(FrozenRDEError):
    code = "out_of_domain"


class IterationCap(FrozenRDEError):
    """An iteration hit its step cap before reaching the requested bound."""

    code = "iteration_cap"


class TailTooLoose(FrozenRDEError):
    code = "tail_too_loose"


class NoSignChange(FrozenRDEError):
    code = "no_sign_change"


class BelowCritical(FrozenRDEError):
    """No positive non-diagonal parameter exists at or below the critical point."""

    code = "below_critical"


class NoBracket(FrozenRDEError):
    code = "no_bracket"


class NotAdmissible(FrozenRDEError):
    code = "not_admissible"


class DepthTooLarge(FrozenRDEError):
    code = "depth_too_large"


class EmptyXiWarning(UserWarning):
    """Raised as a warning when the set of freezing times is empty."""

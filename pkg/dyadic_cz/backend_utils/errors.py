"""
Exception classes shared by the backend utils.

InputFormatError and its subclasses are user errors (bad files, bad flags).
HypothesisViolation means the mathematics was asked to run outside its
assumptions. TheoremContradiction is raised when something a theorem guarantees
did not happen; it carries a diagnostic payload that the CLI dumps in full.
"""

from typing import Any, Dict, Optional


class DyadicError(Exception):
    """Base class for every error raised by dyadic_cz."""


class InputFormatError(DyadicError):
    """Malformed input: rationals, measure files, reports, flags."""


class DimensionMismatchError(InputFormatError):
    """Points or boxes living in different ambient dimensions."""


class ParameterError(InputFormatError):
    """Unknown parameter name or a value outside its registration."""


class HypothesisViolation(DyadicError):
    """A precondition of a construction does not hold."""


class TheoremContradiction(DyadicError):
    """A guaranteed property failed. Never caught and patched over."""

    def __init__(self, message: str, diagnostic: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.diagnostic = diagnostic or {}

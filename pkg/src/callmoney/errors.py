"""Exception types shared across the package.

The command-line layer maps these onto distinct exit codes, so library
code should raise the most specific type that applies.
"""

from __future__ import annotations


class ParameterError(ValueError):
    """An input fails basic validation (wrong sign, wrong type, missing)."""


class DomainError(ValueError):
    """Inputs are individually valid but outside the model's domain."""


class UsageError(ValueError):
    """A request is malformed: unknown observable, figure, or config key."""

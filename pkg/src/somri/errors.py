"""Error categories raised across the package.

All of them subclass ValueError so callers that only care about "bad input"
can catch one thing, while the CLI and tests can tell the categories apart.
"""


class SomriError(ValueError):
    """Base class for all package errors."""


class DataIntegrityError(SomriError):
    """Non-finite values (NaN/Inf) where finite data is required."""


class ShapeError(SomriError):
    """Array dimensions inconsistent with what an operation expects."""


class ConfigError(SomriError):
    """A configuration value is out of range or internally inconsistent."""


class CapabilityError(SomriError):
    """Request exceeds an operation's documented scale limit."""


class DomainError(SomriError):
    """A numeric parameter violates its mathematical domain."""


class FormatError(SomriError):
    """An on-disk artifact is malformed, truncated, or of the wrong version."""


class UsageError(SomriError):
    """An API or CLI entry point was invoked incorrectly."""

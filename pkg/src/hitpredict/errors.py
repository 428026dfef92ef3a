"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes, so raising the right class matters:
validation/schema/credential problems are user-fixable (exit 2), transport
exhaustion is environmental (exit 3), single-class training data is a data
problem (exit 4).
"""

from __future__ import annotations


class HitPredictError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(HitPredictError, ValueError):
    """A value violates a documented domain invariant."""


class SchemaError(HitPredictError, ValueError):
    """A file does not match its documented schema.

    ``line`` is the 1-based line number when known (0 for header-level
    problems discovered before any data row).
    """

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        detail = message
        if path is not None:
            detail = f"{path}: {detail}"
        if line is not None:
            detail = f"{detail} (line {line})"
        super().__init__(detail)
        self.path = path
        self.line = line


class SingleClassError(ValidationError):
    """Training data contains only one label class."""


class CredentialError(HitPredictError):
    """Missing or rejected API credentials."""


class TransportError(HitPredictError):
    """Network-level failure that persisted through the retry budget."""


class ApiError(HitPredictError):
    """The API answered with a non-retryable error status."""


class UnknownPlaylistError(ApiError):
    """The requested playlist does not exist (HTTP 404)."""

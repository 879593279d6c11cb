"""
Exception types raised across templatepy.
"""

from __future__ import annotations


class TemplatepyError(Exception):
    """
    Base class for every error raised by this package.
    """


class GrammarError(TemplatepyError, ValueError):
    """
    A grammar document or template violates the component grammar.

    :ivar field: Name of the offending grammar field (e.g. ``"output_verbalizers"``), if known.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class RenderError(TemplatepyError, ValueError):
    pass


class BackendError(TemplatepyError, RuntimeError):
    """
    A scoring backend failed to produce a value.

    :ivar attempts: How many attempts were made before giving up.
    :ivar retryable: Whether the failure is transient (network/protocol) rather than a contract violation.
    """

    def __init__(self, message: str, attempts: int = 1, retryable: bool = False):
        self.attempts = attempts
        self.retryable = retryable
        super().__init__(message)


class BoundaryError(BackendError):
    """
    A token straddles the prefix/continuation boundary, or no token falls inside the continuation.
    """


class ScriptMissError(BackendError, KeyError):
    def __str__(self):
        return self.args[0]


class BatchScoreError(BackendError):
    """
    Wraps the failure of one request inside a batch.

    :ivar index: Position of the failing request in the batch.
    """

    def __init__(self, index: int, cause: Exception):
        self.index = index
        self.cause = cause
        attempts = getattr(cause, "attempts", 1)
        retryable = getattr(cause, "retryable", False)
        super().__init__(f"request {index} failed: {cause}", attempts=attempts, retryable=retryable)


class PredictionError(TemplatepyError, ValueError):
    pass


class EnsembleError(TemplatepyError, ValueError):
    pass


class DatasetError(TemplatepyError, ValueError):
    """
    A dataset or demonstration file could not be ingested.

    :ivar line: 1-based line number of the offending record, if known.
    """

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        location = ""
        if path is not None:
            location += f"{path}"
        if line is not None:
            location += f"{':' if location else 'line '}{line}"
        super().__init__(f"{location}: {message}" if location else message)


class MetricError(TemplatepyError, ValueError):
    pass


class ConfigError(TemplatepyError, ValueError):
    pass

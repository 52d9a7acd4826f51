"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
OracleError -> 3. Everything else is a bug and propagates.
"""
from __future__ import annotations


class RelinduceError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(RelinduceError):
    """Invalid or contradictory configuration, caught before any work starts."""


class DataError(RelinduceError):
    """Malformed or insufficient input data."""


class LeakageError(DataError):
    """A template's provenance pair lies outside the training split."""


class InvalidQueryError(DataError):
    """A masked query violates the oracle preconditions (mask count, length, k)."""


class OracleError(RelinduceError):
    """Failure while talking to a language-model oracle backend."""


class OracleTransportError(OracleError):
    """Retriable transport-level failure (connection, timeout, 503)."""


class OracleProtocolError(OracleError):
    """Non-retriable protocol violation (malformed request or response)."""


class TrainingDivergedError(RelinduceError):
    """Non-finite loss or gradient during classifier training."""

    def __init__(self, message: str, *, step: int, learning_rate: float):
        super().__init__(f"{message} (step={step}, learning_rate={learning_rate:g})")
        self.step = step
        self.learning_rate = learning_rate


class StageError(RelinduceError):
    """A pipeline stage failed; partial artifacts are kept on disk."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause

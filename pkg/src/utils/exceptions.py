"""Custom exceptions for the pronunciation front-end."""

from typing import Optional


class FrontEndError(Exception):
    """Base exception for all pronunciation front-end errors."""
    pass


class LocaleError(FrontEndError):
    """Raised when a locale code cannot be parsed."""
    pass


class PhonemeStructureError(FrontEndError):
    """Raised when a phoneme sequence violates its structural invariants."""
    pass


class CorpusFormatError(FrontEndError):
    """Raised when a corpus line or entry is malformed."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class VocabError(FrontEndError):
    """Raised when a vocabulary cannot be built or is inconsistent."""
    pass


class EncodeError(FrontEndError):
    """Raised when text or pronunciations cannot be encoded."""
    pass


class SplitError(FrontEndError):
    """Raised when a dataset split cannot be produced."""
    pass


class MetricError(FrontEndError):
    """Raised when a metric is undefined for its input."""
    pass


class BatchingError(FrontEndError):
    """Raised when training pairs cannot be packed into batches."""
    pass


class TrainingError(FrontEndError):
    """Raised when training has to abort."""

    def __init__(self, message: str, step: Optional[int] = None):
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)
        self.step = step


class CheckpointError(FrontEndError):
    """Raised when a checkpoint cannot be written or read."""
    pass


class OracleError(FrontEndError):
    """Raised when the oracle front-end cannot pronounce a text."""
    pass


class GenerationError(FrontEndError):
    """Raised when a synthetic corpus cannot be generated."""
    pass


class ConfigError(FrontEndError):
    """Raised when there's an error in configuration."""
    pass


class UsageError(FrontEndError):
    """Raised when a command is invoked with invalid arguments."""
    pass

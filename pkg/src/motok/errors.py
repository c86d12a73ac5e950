"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes, so raise the most specific one that
applies.
"""


class MotokError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(MotokError):
    """Bad or unknown configuration value (CLI exit code 2)."""


class MissingArtifactError(MotokError):
    """A referenced checkpoint/store/file does not exist (exit code 3)."""


class DataValidationError(MotokError):
    """Dataset layout or manifest invariant violated (exit code 4)."""


class NumericError(MotokError):
    """Numeric failure such as NaN loss or degenerate input (exit code 5)."""


class BvhParseError(DataValidationError):
    """Malformed BVH file; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class RetriableLLMError(MotokError):
    """Transient HTTP failure talking to the prompt-rewrite endpoint."""

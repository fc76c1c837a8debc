"""Exception types raised by nepclust."""


class NepClustError(Exception):
    """Base class for all package errors."""


class DimensionError(NepClustError, ValueError):
    """Declared shape does not match the data."""


class DataError(NepClustError, ValueError):
    """Non-finite or otherwise invalid values."""


class DegenerateInputError(NepClustError, ValueError):
    """Input that cannot be processed, such as a zero-norm feature row."""


class ParameterError(NepClustError, ValueError):
    """Invalid parameter value."""


class FormatError(NepClustError, ValueError):
    """Malformed binary cache or model file."""


class LabelParseError(NepClustError, ValueError):
    def __init__(self, line_no, text):
        super().__init__(f"line {line_no}: expected a non-negative integer, got {text!r}")
        self.line_no = line_no


class StageError(NepClustError, RuntimeError):
    """Wraps an error raised inside a pipeline stage."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause

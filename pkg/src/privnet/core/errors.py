"""
Error Types
Exceptions raised by the numerical kernels and the file readers.
"""

from typing import Optional


class PrivnetError(ValueError):
    """Base class for all library errors."""


class DimensionMismatchError(PrivnetError):
    """Operand shapes do not agree."""


class NonFiniteError(PrivnetError):
    """Input contains NaN or infinite values."""


class InvalidParameterError(PrivnetError):
    """A model, mechanism or configuration parameter is out of range."""


class UndefinedPreferenceError(PrivnetError):
    """A preference cannot be recovered from the given budgets."""


class NotRescalableError(PrivnetError):
    """A debiased tensor cannot be divided by f_i f_j because some f_i is zero."""


class RangeError(PrivnetError):
    """A node or layer id falls outside the declared range."""


class ParseError(PrivnetError):
    """Malformed input file, reported with its location."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")

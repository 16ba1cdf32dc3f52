"""Exception hierarchy. Each family carries the CLI exit code it maps to."""

from typing import Optional


class BekkError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code = 1

    def to_dict(self) -> dict:
        """Structured form printed by the CLI on stderr."""
        return {
            "error": type(self).__name__,
            "message": str(self),
            "exit_code": self.exit_code,
        }


class SpecFileError(BekkError):
    """A spec, path or config file could not be read or written."""

    exit_code = 3


class SpecParseError(BekkError):
    """A file was readable but its content could not be parsed."""

    exit_code = 4

    def __init__(self, path: str, message: str, line: Optional[int] = None,
                 column: Optional[int] = None):
        self.path = path
        self.line = line
        self.column = column
        where = f"{path}"
        if line is not None:
            where += f":{line}:{column if column is not None else 0}"
        super().__init__(f"{where}: {message}")


class SpecValidationError(BekkError):
    exit_code = 5


class DimensionError(SpecValidationError):
    pass


class NotPositiveDefiniteError(SpecValidationError):
    pass


class EmptyTermsError(SpecValidationError):
    pass


class DecompositionError(BekkError):
    """Cholesky failed; `pivot` is the zero-based index of the failing pivot."""

    exit_code = 6

    def __init__(self, pivot: int, value: float):
        self.pivot = pivot
        self.value = value
        super().__init__(f"Cholesky decomposition failed at pivot {pivot} (leading minor value {value:.6g})")


class SymmetryError(BekkError):
    exit_code = 6


class InapplicableError(BekkError):
    """Operation called on a spec outside the class it is defined for."""

    exit_code = 7


class SizeLimitError(BekkError):
    exit_code = 7


class NoRootError(BekkError):
    exit_code = 7


class EstimationError(BekkError):
    exit_code = 8


class DegenerateSampleError(EstimationError):
    pass


class ZeroExceedanceError(EstimationError):
    pass


class RegressionError(EstimationError):
    pass

"""Exception hierarchy shared across the package."""


class DecompLossError(Exception):
    """Base class for every error raised by decomploss."""


class InvalidArgumentError(DecompLossError, ValueError):
    """A caller passed an argument outside its documented domain."""


class InvalidDataError(DecompLossError, ValueError):
    """Input data violates a value invariant (NaN, Inf, unparseable cell)."""


class ConfigurationError(DecompLossError, ValueError):
    """A configuration is inconsistent or cannot be satisfied by the data."""


class LoadError(DecompLossError):
    """Base class for CSV ingestion failures."""


class MissingFileError(LoadError, FileNotFoundError):
    pass


class CellParseError(LoadError, InvalidDataError):
    def __init__(self, row: int, column: str, value: str):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"row {row}, column {column!r}: cannot parse {value!r} as a finite real")


class ZeroVarianceError(LoadError, InvalidDataError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"channel {column!r} has zero variance")


class TrainingError(DecompLossError, RuntimeError):
    """Training diverged or was aborted."""

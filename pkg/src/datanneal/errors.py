"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
anything else -> 3 (internal invariant violation).
"""


class ConfigError(ValueError):
    """Invalid configuration or schedule parameters."""


class DataError(ValueError):
    """Invalid or inconsistent corpus / batch data."""


class UnsupportedPolicyError(ConfigError):
    """Operation requires a different mixing-policy variant."""


class InfeasibleBudgetError(ConfigError):
    """A source-data budget implies an initial ratio outside (0, 1)."""


class MalformedLineError(DataError):
    """A corpus line does not have the required columns."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class EmptyCorpusError(DataError):
    """A corpus stream contained no sentences."""


class EmptyPoolError(DataError):
    """A draw was requested from an empty sentence pool."""


class LabelMismatchError(DataError):
    """A gold label is not in the selected head's label set."""


class ShapeMismatchError(DataError):
    """Gold and predicted label sequences disagree in shape."""

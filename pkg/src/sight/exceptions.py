"""Exception hierarchy.

Every error raised by the package derives from :class:`SightError`; most also
derive from the matching builtin so callers catching ``ValueError`` keep working.
"""


class SightError(Exception):
    pass


class ShapeError(SightError, ValueError):
    pass


class DataError(SightError, ValueError):
    """Non-finite or otherwise invalid numeric input."""


class DomainError(SightError, ValueError):
    """A value lies outside the mathematical domain of an operation."""


class ArgumentError(SightError, ValueError):
    pass


class StructuralError(SightError, ValueError):
    """Malformed graph structure (CSR layout, asymmetry, duplicates)."""


class SplitError(SightError, ValueError):
    pass


class NumericalError(SightError, ArithmeticError):
    pass


class UndefinedMetricError(SightError, ValueError):
    """A metric is undefined for the given input (e.g. AUROC with one class)."""


class CompatibilityError(SightError, ValueError):
    """Checkpoint and dataset (or file) do not fit together."""


class ParseError(SightError, ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class CalibrationWarning(UserWarning):
    """Temperature fit hit a grid endpoint or saw degenerate labels."""

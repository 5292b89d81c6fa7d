from typing import Optional, Tuple


class PyFairRecError(Exception):
    def __init__(self, message: str):
        self.message = message
        super().__init__(message)


class SchemaError(PyFairRecError):
    """A column named by the schema is missing, or the schema itself is invalid."""

    def __init__(self, message: str):
        super().__init__(message)


class ParseError(PyFairRecError):
    """A cell of the input file could not be converted.

    ``row`` is the 1-based data row (the header is not counted).
    """

    # Extra fields need to be optional to allow the exception to be picklable:
    # https://stackoverflow.com/questions/16244923/how-to-make-a-custom-exception-class-with-multiple-init-args-pickleable  # noqa: E501
    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        super().__init__(message)

    def __str__(self):
        if self.row is None:
            return self.message
        return 'row %d: %s' % (self.row, self.message)


class EmptyDatasetError(PyFairRecError):
    """The input contains no data rows."""
    pass


class SpecError(PyFairRecError):
    """A data-generating process specification violates its invariants."""
    pass


class DomainError(PyFairRecError):
    """An argument lies outside the domain an operation is defined on."""
    pass


class RegularizationRequiredError(PyFairRecError):
    """Labels are single-class and no regularization bounds the weights."""
    pass


class NoOverlapError(PyFairRecError):
    """A recommendation stratum (r, a) has no observations."""

    def __init__(self, message: str, stratum: Optional[Tuple[int, str]] = None):
        self.stratum = stratum
        super().__init__(message)


class InfeasibleError(PyFairRecError):
    """The disparity bound lies outside the range attainable by any policy."""

    def __init__(self, message: str, feasible_range: Optional[Tuple[float, float]] = None):
        self.feasible_range = feasible_range
        super().__init__(message)

    def __str__(self):
        if self.feasible_range is None:
            return self.message
        return '%s (feasible range: [%.6g, %.6g])' % (
            self.message, self.feasible_range[0], self.feasible_range[1],
        )


class MonotonicityViolationError(PyFairRecError):
    """A group-mean treatment effect is not positive."""
    pass


class UnsupportedModeError(PyFairRecError):
    """The uncertainty set mode is representable but cannot be optimized over."""
    pass


class ConfigError(PyFairRecError):
    """An experiment configuration file is malformed."""

    def __init__(self, message: str, lineno: Optional[int] = None, path: Optional[str] = None):
        self.lineno = lineno
        self.path = path
        super().__init__(message)

    def __str__(self):
        location = self.path if self.path is not None else '<config>'
        if self.lineno is not None:
            location = '%s:%d' % (location, self.lineno)
        return '%s: %s' % (location, self.message)

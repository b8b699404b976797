"""Exception hierarchy for the qme package."""


class QMEError(Exception):
    """Base class for every error raised by qme."""


class SizeLimit(QMEError):
    pass


class BadSite(QMEError):
    pass


class NotHermitian(QMEError):
    pass


class DomainError(QMEError):
    pass


class BadStrength(QMEError):
    pass


class UnsupportedSize(QMEError):
    pass


class NumericalDrift(QMEError):
    pass


class SupportViolation(QMEError):
    pass


class SearchFailed(QMEError):
    pass


class CrossCheckFailed(QMEError):
    pass


class ParseError(QMEError):
    """Malformed configuration text; carries the line and column."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class ValidationError(QMEError):
    """A configuration value violated an invariant; ``field`` names it."""

    def __init__(self, field, message=""):
        self.field = field
        super().__init__(f"{field}: {message}" if message else field)

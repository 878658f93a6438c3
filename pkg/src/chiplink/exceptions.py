"""Exception hierarchy shared by all chiplink modules."""


class ChiplinkError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ChiplinkError, ValueError):
    """An argument lies outside its mathematical domain."""


class InfeasibleCodeError(ChiplinkError):
    """No code in the family meets the reliability target."""

    def __init__(self, message, p_pre=None, strongest=None):
        super().__init__(message)
        self.p_pre = p_pre
        self.strongest = strongest


class DegenerateOperatingPointError(ChiplinkError):
    """Every attempt is detected as failed, so goodput is undefined."""


class MissingRecordError(ChiplinkError, KeyError):
    """A synthesis record required by the protection stack is absent."""

    def __str__(self):
        return str(self.args[0]) if self.args else "missing record"


class InputFormatError(ChiplinkError, ValueError):
    """A structured-text input could not be parsed.

    ``row`` is 1-based and counts data rows (header excluded).
    """

    def __init__(self, message, source=None, row=None, field=None):
        where = []
        if source is not None:
            where.append(str(source))
        if row is not None:
            where.append(f"row {row}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.source = source
        self.row = row
        self.field = field


class InvariantError(ChiplinkError, ValueError):
    """A record parsed but violates a domain invariant."""


class DoubleCorrectionError(ChiplinkError):
    """ECC correction was requested on already-corrected link metrics."""


class DanglingEndpointError(ChiplinkError, ValueError):
    """A net refers to a chiplet edge that does not exist."""

"""Exception hierarchy shared by all modules."""


class GuardOMQError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(GuardOMQError):
    """A fact or database does not conform to the schema it is checked against."""


class PreconditionError(GuardOMQError):
    """An operation was called with arguments violating its precondition."""


class BudgetRequired(PreconditionError):
    """A non-terminating chase was requested without a depth budget."""


class ThresholdExceeded(GuardOMQError):
    """Exact search refused because the instance exceeds the size threshold."""


class BudgetExceeded(GuardOMQError):
    """An enumeration cap was hit; the result would have been truncated."""


class ParseError(GuardOMQError):
    def __init__(self, message, line=None, column=None, path=None):
        self.line = line
        self.column = column
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:{column}: " if column is not None else f"{line}: "
        super().__init__(f"{where}{message}")

"""Exception hierarchy shared across the package."""


class MinfaultError(Exception):
    """Base class for all errors raised by this package."""


class InvalidClauseError(MinfaultError, ValueError):
    """A clause (path / fault set) is empty where it must not be."""


class VariableRangeError(MinfaultError, ValueError):
    """A variable id is negative or outside the declared universe."""


class CnfParseError(MinfaultError, ValueError):
    """Malformed formula text; message names the offending line."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class ParameterError(MinfaultError, ValueError):
    """Generator parameters violate a documented constraint."""


class SchemaError(MinfaultError, ValueError):
    """A system/result file does not match the expected schema."""


class UnknownRequestError(MinfaultError, KeyError):
    """Lookup of a request id that does not exist in the system."""


class FormulaTooLargeError(MinfaultError, ValueError):
    """Brute-force enumeration refused: variable universe too large."""


class InfeasibleBudgetError(MinfaultError):
    """The hard clauses cannot all be covered within the given budget."""

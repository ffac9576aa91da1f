"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to.
"""


class StrongFaithError(Exception):
    exit_code = 1


class InvalidSizeError(StrongFaithError, ValueError):
    pass


class InvalidDensityError(StrongFaithError, ValueError):
    pass


class InvalidQueryError(StrongFaithError, ValueError):
    pass


class InvalidRangeError(StrongFaithError, ValueError):
    pass


class InvalidFamilyError(StrongFaithError, ValueError):
    pass


class NumericalDegeneracyError(StrongFaithError, ArithmeticError):
    pass


class ParseError(StrongFaithError):
    exit_code = 2

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class EnumerationTooLargeError(StrongFaithError):
    exit_code = 3

    def __init__(self, count, budget):
        self.count = count
        self.budget = budget
        super().__init__(
            f"enumeration of {count} items exceeds the work budget of {budget}")


class SymbolicTooLargeError(StrongFaithError):
    exit_code = 3


class VerificationError(StrongFaithError):
    exit_code = 4

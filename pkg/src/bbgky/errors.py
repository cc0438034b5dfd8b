"""Exception hierarchy shared by all passes."""


class BBGKYError(Exception):
    """Base class for every error raised by the package."""


class StructuralError(BBGKYError, ValueError):
    """A term or index is malformed (duplicate index, overlapping factors, ...)."""


class DomainError(BBGKYError, ValueError):
    """A rewrite was asked to act outside its domain, e.g. tracing an absent index."""


class UsageError(BBGKYError, ValueError):
    """An operation was called with arguments violating its preconditions."""


class SpecificationError(BBGKYError, ValueError):
    """The system declaration or a derivation target is invalid."""


class SpecParseError(SpecificationError):
    def __init__(self, message: str, line: int, column: int):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}")

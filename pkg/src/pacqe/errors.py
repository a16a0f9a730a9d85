"""Exception hierarchy shared by every pacqe module."""


class PacqeError(Exception):
    """Base class for all errors raised by pacqe."""


class MalformedFormula(PacqeError):
    pass


class UnsupportedQuantifiedInput(PacqeError):
    pass


class IncompleteAssignment(PacqeError):
    def __init__(self, var):
        super().__init__(f"assignment is missing a value for {var!r}")
        self.var = var


class SubstitutionShapeError(PacqeError):
    pass


class CaseExplosion(PacqeError):
    """A guard on the number of generated cases (or threshold tuples) tripped."""

    def __init__(self, what, size, limit):
        super().__init__(f"{what}: {size} exceeds the limit of {limit}")
        self.what = what
        self.size = size
        self.limit = limit


class OpenFormulaError(PacqeError):
    def __init__(self, free):
        self.free = tuple(sorted(free))
        super().__init__("formula is not a sentence; free variables: " + ", ".join(self.free))


class PipelineInvariantError(PacqeError):
    """An internal invariant of the elimination pipeline was violated (a bug)."""


class OracleResourceError(PacqeError):
    pass


class ParseError(PacqeError):
    def __init__(self, message, line=None, column=None):
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.column = column

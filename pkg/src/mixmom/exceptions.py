"""Exception hierarchy shared by the library and the command line."""


class MixmomError(Exception):
    """Base class for all library errors."""

    category = "error"


class ArgumentError(MixmomError, ValueError):
    category = "argument"


class ParseError(MixmomError, ValueError):
    category = "parse"

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(MixmomError, ValueError):
    category = "validation"


class PlanError(MixmomError, ValueError):
    category = "plan"


class SolverError(MixmomError, ArithmeticError):
    category = "solver"


class StitchError(MixmomError, RuntimeError):
    category = "stitch"


class UnsupportedError(MixmomError, NotImplementedError):
    category = "unsupported"

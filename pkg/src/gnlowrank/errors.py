"""Exception hierarchy shared by all modules."""


class LowRankError(Exception):
    """Base class for every error raised by this package."""


class RankDeficient(LowRankError):
    """A factor expected to have full column rank does not."""


class ConvergenceFailure(LowRankError):
    """An iterative kernel hit its iteration cap before reaching tolerance."""


class DimensionMismatch(LowRankError, ValueError):
    pass


class NonFiniteInput(LowRankError, ValueError):
    pass


class AsymmetricInput(LowRankError, ValueError):
    pass


class LinesearchExhausted(LowRankError):
    """Backtracking reached its cap without satisfying the Armijo rule."""


class ParseError(LowRankError, ValueError):
    """Malformed input file; carries the 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateEntry(ParseError):
    pass


class OutOfBounds(ParseError):
    pass


class ValidationError(LowRankError, ValueError):
    """A configuration value is missing, unknown or out of range."""

    def __init__(self, key, message=""):
        self.key = key
        super().__init__(f"{key}: {message}" if message else key)

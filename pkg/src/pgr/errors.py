"""Exception hierarchy shared by all modules."""


class PGRError(Exception):
    """Base class for every error raised by this package."""


class FormatError(PGRError, ValueError):
    """A file does not follow its declared binary or text layout."""


class DataError(PGRError, ValueError):
    """Numerically invalid input, e.g. NaN or Inf coordinates."""


class ParseError(PGRError, ValueError):
    """A structured-text entry could not be parsed."""


class ValidationError(PGRError, ValueError):
    """A value parsed fine but violates a domain invariant."""


class ContractError(PGRError, ValueError):
    """Arguments that do not fit together, such as a mask of the wrong length."""


class QueryError(PGRError, KeyError):
    """A grid query referenced a cell that holds no points."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class UnknownNameError(PGRError, LookupError):
    """A preset or preprocessor name is not registered."""


class DecodeError(PGRError, ValueError):
    """A bitstream is corrupt, truncated or of an unsupported version."""


class RateError(PGRError, ValueError):
    """Bits per point is undefined (frame had zero points)."""


class ArityError(PGRError, ValueError):
    """A rate curve has too few points for a cubic fit."""


class DomainError(PGRError, ValueError):
    """Two rate curves share no common log-rate interval."""

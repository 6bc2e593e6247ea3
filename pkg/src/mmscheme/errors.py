"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class SchemeError(Exception):
    """Base class for all errors raised by mmscheme."""


class InvalidSchemeError(SchemeError, ValueError):
    """A BilinearScheme violates its structural invariants."""


class FormatError(SchemeError, ValueError):
    """Malformed coefficient file."""


class TokenError(FormatError):
    def __init__(self, token: str, line: int, column: int):
        self.token = token
        self.line = line
        self.column = column
        super().__init__(f"non-integer token {token!r} at line {line}, column {column}")


class RankMismatchError(FormatError):
    """Blocks of a coefficient file disagree on their column count."""


class DimensionError(FormatError):
    """Dimensions cannot be inferred, or do not fit the row counts."""


class SerializationError(SchemeError, ValueError):
    pass


class SlpError(SchemeError, ValueError):
    """Base class for straight-line program problems."""


class SlpSyntaxError(SlpError):
    pass


class SemanticError(SlpError):
    """A source is used before it is defined."""


class SSAError(SlpError):
    """A destination is assigned more than once."""


class KindError(SlpError):
    """Operands of an instruction have incompatible kinds."""


class MalformedProgramError(SlpError):
    pass


class ExtractionError(SlpError):
    """The program does not compute a bilinear scheme."""


class PreconditionError(SchemeError, ValueError):
    pass


class ParameterError(SchemeError, ValueError):
    pass


class ShapeError(SchemeError, ValueError):
    pass


class RingOverflowError(SchemeError, OverflowError):
    """A checked 64-bit integer operation left the representable range."""


class DegenerateRecursionError(SchemeError, ValueError):
    """The closed-form count is undefined because rank equals base**2.

    The alternative form ``adds = q*k*(s**2)**(k-1)`` is attached as
    ``muls``/``adds`` so callers can still use it.
    """

    def __init__(self, muls: int, adds: int):
        self.muls = muls
        self.adds = adds
        super().__init__(
            f"rank equals base**2; degenerate recursion gives muls={muls}, adds={adds}"
        )

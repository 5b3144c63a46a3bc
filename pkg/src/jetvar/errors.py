"""Exception hierarchy shared by every jetvar module."""

from __future__ import annotations


class JetvarError(Exception):
    """Base class for all errors raised by jetvar."""


class IncompatibleBundleError(JetvarError):
    """Expressions or forms built over different bundles were combined."""


class OrderLimitError(JetvarError):
    """A computation needed jets above the configured order cap."""


class MultiIndexError(JetvarError, ValueError):
    pass


class UnsupportedOrderError(JetvarError):
    """The input exceeds the integration-by-parts depth the engine supports."""


class NotASymmetryError(JetvarError):
    """Raised by ``noether_current`` when the field does not leave the Lagrangian invariant.

    The offending density is kept on ``residual``.
    """

    def __init__(self, message: str, residual=None):
        super().__init__(message)
        self.residual = residual


class BianchiObstructionError(JetvarError):
    """The Bergmann-Bianchi morphism does not vanish, so no superpotential exists."""

    def __init__(self, message: str, bianchi=None):
        super().__init__(message)
        self.bianchi = bianchi


class DegenerateDimensionError(JetvarError):
    pass


class UnsupportedStructureError(JetvarError):
    pass


class PreconditionError(JetvarError):
    pass


class JetvarParseError(JetvarError):
    """Lexical, syntactic or semantic error in theory text.

    ``line`` and ``column`` are 1-based; either may be ``None`` when the error
    is not tied to a position (for instance an invalid UTF-8 payload).
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)

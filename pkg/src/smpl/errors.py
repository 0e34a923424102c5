"""Exception types shared across the package."""

from __future__ import annotations


class SmplError(Exception):
    """Base class for all errors raised by this package."""


class ProgramParseError(SmplError):
    """Syntax or validation error in a program or graph file."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{line}:{column or 0}: {message}"
        super().__init__(message)


class InvalidProgramError(SmplError):
    """Some total choice admits no stable model.

    `witness` is the offending total choice, given as the tuple of included
    probabilistic fact atoms (all other facts excluded).
    """

    def __init__(self, witness, message: str | None = None):
        self.witness = tuple(witness)
        inc = ", ".join(str(a) for a in self.witness) or "<none>"
        super().__init__(message or f"no stable model for the total choice including: {inc}")


class ZeroProbabilityEvidenceError(SmplError):
    """Conditioning on evidence whose probability is zero."""


class UnknownAtomError(SmplError):
    """A query or evidence atom does not occur in the ground program."""


class CoverageError(SmplError):
    """Fully-observed learning requires every fact observed in every example."""


class ResourceLimitError(SmplError):
    """A configured cap (atoms, facts, circuit nodes, models) was exceeded."""

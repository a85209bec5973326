"""Exception hierarchy shared by all modules."""


class DiagPrimesError(Exception):
    """Base class for every error raised by this package."""


class DomainError(DiagPrimesError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class CapacityError(DiagPrimesError):
    """The requested computation exceeds a configured size or memory budget."""


class ValidationError(DiagPrimesError, ValueError):
    """A system or configuration violates its invariants."""


class StructureError(DiagPrimesError, ValueError):
    """The residue group is not cyclic; use the CRT decomposition instead."""


class ParseError(DiagPrimesError, ValueError):
    """A configuration document does not match the schema.

    Attributes:
        path: dotted path of the offending field ("" for the whole document).
    """

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class DegenerateInputError(DiagPrimesError, ValueError):
    """The input leaves nothing to measure (e.g. every sample is on a major arc)."""

"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """A precondition on an argument was violated."""


class SizeCapError(ValueError):
    """The request exceeds a hard size cap (dense tables, brute force, search)."""


class DegenerateRestriction(ZeroDivisionError):
    """Normalizing by v(X minus O) is impossible because that value is zero."""


class SearchCapExceeded(SizeCapError):
    """Branch-and-bound refused to run on too many conflict vertices."""


class ConstructionInfeasible(RuntimeError):
    """A partition cell could not be sandwiched within its budget."""

    def __init__(self, message, cell_index=None, cell_mask=None):
        super().__init__(message)
        self.cell_index = cell_index
        self.cell_mask = cell_mask


class ScenarioInvalid(ValueError):
    """A scenario or config failed validation."""

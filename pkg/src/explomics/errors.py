"""Exception hierarchy shared by all explomics modules."""


class ExplomicsError(Exception):
    """Base class for all domain errors raised by this package."""


class ParseError(ExplomicsError):
    """Malformed input text. Carries the offending row/column when known."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        loc = ""
        if row is not None and column is not None:
            loc = f" (row {row}, column {column})"
        elif row is not None:
            loc = f" (row {row})"
        super().__init__(message + loc)


class ValidationError(ExplomicsError):
    """An invariant of a domain object is violated."""


class DegenerateInputError(ExplomicsError):
    """Input is structurally valid but mathematically degenerate (e.g. all-zero matrix)."""


class DisconnectedGraphError(ExplomicsError):
    """A neighbor graph splits into several components.

    ``components`` lists the node indices of every connected component so the
    caller can report or restrict to the largest one.
    """

    def __init__(self, components):
        self.components = [sorted(c) for c in components]
        sizes = ", ".join(str(len(c)) for c in self.components)
        super().__init__(
            f"neighbor graph is disconnected: {len(self.components)} components "
            f"of sizes {sizes}"
        )

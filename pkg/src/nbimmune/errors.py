"""Exception types shared across the package."""


class GraphError(ValueError):
    """Base class for invalid graph input."""


class EmptyGraphError(GraphError):
    """Raised when an operation needs at least one node (or edge)."""


class EdgeListParseError(GraphError):
    def __init__(self, lineno, line, reason="expected two integer tokens"):
        self.lineno = lineno
        self.line = line
        super().__init__(f"line {lineno}: {reason}: {line!r}")


class CapExceededError(ValueError):
    """Dense materialization refused because 2m is above the size cap."""


class ConditioningError(ArithmeticError):
    """An eigenvector basis is too ill-conditioned to expand in."""


class PreconditionError(ValueError):
    pass


class ConvergenceWarning(RuntimeWarning):
    pass

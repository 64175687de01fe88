"""Exception types shared across the package."""


class FreeEndoError(Exception):
    """Base class for all errors raised by freeendo."""


class ParseError(FreeEndoError, ValueError):
    """Malformed word or endomorphism text.

    ``line`` and ``column`` are 1-based when known.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class TrivialCore(FreeEndoError):
    """The core of a graph is empty (the graph was a forest)."""


class DegenerateEdgeImage(FreeEndoError):
    """An edge image tightened to a point."""

    def __init__(self, edge):
        self.edge = edge
        super().__init__(f"edge {edge} maps to a point after tightening")


class NonInjective(FreeEndoError):
    """A fold identified two edges with common endpoints, killing a loop."""

    def __init__(self, fold_index, vertex, edges, message=None):
        self.fold_index = fold_index
        self.vertex = vertex
        self.edges = edges
        super().__init__(
            message
            or f"fold #{fold_index} at vertex {vertex} identifies edges {edges} "
            "with equal endpoints; the homomorphism is not injective"
        )


class PreconditionError(FreeEndoError, ValueError):
    """An operation was called on input outside its domain."""


class CapExceededError(FreeEndoError):
    """An iteration bound was reached before the computation settled."""

"""Exception types. Everything derives from ``ECVCError`` (a ``ValueError``)."""


class ECVCError(ValueError):
    pass


class UnknownVertexLabel(ECVCError):
    def __init__(self, label):
        super().__init__(f"unknown vertex label {label!r}")
        self.label = label


class DuplicateVertexLabel(ECVCError):
    def __init__(self, label):
        super().__init__(f"duplicate vertex label {label!r}")
        self.label = label


class IsolatedVertex(ECVCError):
    def __init__(self, label):
        super().__init__(f"vertex {label!r} has no incident edge")
        self.label = label


class DuplicateEdgeLabel(ECVCError):
    def __init__(self, label):
        super().__init__(f"duplicate edge label {label!r}")
        self.label = label


class DifferentComponents(ECVCError):
    def __init__(self, *vertices):
        super().__init__(f"vertices {vertices} are not in one component")
        self.vertices = vertices


class ParseError(ECVCError):
    """Malformed input file; carries the 1-based line and column."""

    def __init__(self, source, line, column, message):
        where = f"{source}:{line}:{column}" if line else source
        super().__init__(f"{where}: {message}")
        self.source = source
        self.line = line
        self.column = column


class GraphFormatError(ParseError):
    pass


class MissingConstraint(ECVCError):
    def __init__(self, edge, problem=None):
        msg = f"no constraint for edge {edge!r}"
        if problem is not None:
            msg += f" in problem {problem}"
        super().__init__(msg)
        self.edge = edge
        self.problem = problem


class ColorNotInIntersection(ECVCError):
    pass


class NoSolutionOnPath(Exception):
    """Path extension stopped: the color reached at ``index + 1`` is not in the next edge."""

    def __init__(self, index, coloring=None):
        super().__init__(f"path extension fails at step {index}")
        self.index = index
        self.coloring = coloring


class NoGlobalSolution(ECVCError):
    pass


class IndexOutOfRange(ECVCError, IndexError):
    pass


class InstanceTooLarge(ECVCError):
    pass


class PedigreeError(ECVCError):
    pass


class IBDError(ECVCError):
    pass


class SexMissingOnX(IBDError):
    def __init__(self, individual):
        super().__init__(f"individual {individual!r} has unknown sex on the X chromosome")
        self.individual = individual


class UnreferencedLabel(IBDError):
    def __init__(self, label, individual=None):
        super().__init__(f"haplotype label {label!r} does not trace to a founder")
        self.label = label
        self.individual = individual


class EmptyGraph(ECVCError):
    pass


class IdenticalIBD(ECVCError):
    pass


class OverlappingEventsUnresolvable(ECVCError):
    pass


class InvalidCrossoverSpec(ECVCError):
    pass


class ConfigError(ECVCError):
    pass

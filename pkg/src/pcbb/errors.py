"""Exception hierarchy shared by every module."""


class PcbbError(Exception):
    pass


class ValidationError(PcbbError, ValueError):
    pass


class IndexOutOfRange(ValidationError):
    pass


class DuplicatePair(ValidationError):
    pass


class MlClConflict(ValidationError):
    pass


class NonFiniteCoordinate(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class PreconditionViolated(PcbbError):
    pass


class RootInfeasible(PcbbError):
    """The constraint system admits no clustering at all.

    ``witness`` holds a small certificate when one is cheap to find, for
    example the vertices of a (K+1)-clique in the cannot-link graph or the
    cannot-link pair that falls inside one must-link component.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NodeInfeasible(PcbbError):
    pass


class GroupInfeasible(NodeInfeasible):
    pass


class DegenerateRegion(PcbbError):
    pass


class TooLarge(PcbbError):
    pass


class ParseError(PcbbError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class RaggedRows(ParseError):
    pass


class Unsatisfiable(PcbbError):
    pass


class AssignmentBlocked(PcbbError):
    pass

"""Exception and warning types raised across the package."""


class DagSurvError(Exception):
    """Base class for all package errors."""


class ShapeError(DagSurvError, ValueError):
    pass


class DimensionError(ShapeError):
    pass


class NonSquareError(DimensionError):
    pass


class CycleError(DagSurvError, ValueError):
    def __init__(self, message, nodes=()):
        super().__init__(message)
        self.nodes = tuple(nodes)


class NonScalarLossError(DagSurvError, ValueError):
    pass


class DegenerateRangeError(DagSurvError, ValueError):
    pass


class TooSmallError(DagSurvError, ValueError):
    pass


class EmptyDatasetError(DagSurvError, ValueError):
    pass


class NoComparablePairsError(DagSurvError, ValueError):
    pass


class FormatError(DagSurvError, ValueError):
    """A file did not match its documented format.

    ``path`` and ``line`` locate the offending input when known.
    """

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
            loc += ": "
        super().__init__(loc + message)
        self.path = path
        self.line = line


class TargetNotSinkWarning(UserWarning):
    pass

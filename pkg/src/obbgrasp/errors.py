"""Exception types raised across the package."""


class GraspError(Exception):
    """Base class for all package errors."""


class InvalidAxesError(GraspError, ValueError):
    pass


class InvalidExtentsError(GraspError, ValueError):
    pass


class InvalidTransformError(GraspError, ValueError):
    pass


class TooFewSamplesError(GraspError, ValueError):
    pass


class UnsupportedShapeError(GraspError, ValueError):
    def __init__(self, shape):
        self.shape = shape
        super().__init__(f"no grasp strategy for shape class {shape!s}")


class SceneFormatError(GraspError, ValueError):
    """Scene or grasp file failed to parse or validate.

    The message carries the file path plus either a line/column position
    (JSON syntax) or a dotted field path (schema/invariant violations).
    """


class DuplicateIdError(SceneFormatError):
    pass


class StaleIndexError(GraspError, RuntimeError):
    pass


class PlacementError(GraspError, RuntimeError):
    pass

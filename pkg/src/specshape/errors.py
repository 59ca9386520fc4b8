"""Exception hierarchy shared by all specshape modules."""


class SpecShapeError(ValueError):
    """Base class for every error raised by specshape."""


# geometry
class TooFewPointsError(SpecShapeError):
    pass


class DegenerateConfigurationError(SpecShapeError):
    pass


class NotAnEllipseError(SpecShapeError):
    pass


class ZeroMatrixError(SpecShapeError):
    pass


class NotSymmetricError(SpecShapeError):
    pass


class BehindCameraError(SpecShapeError):
    pass


# isophotes / images
class EmptyImageError(SpecShapeError):
    pass


class ImageDecodeError(SpecShapeError):
    pass


class UnsupportedFormatError(ImageDecodeError):
    pass


class CorruptHeaderError(ImageDecodeError):
    pass


# renderer
class NoSpecularityError(SpecShapeError):
    pass


class OutOfDomainError(SpecShapeError):
    pass


class AmbiguousSpecularityWarning(UserWarning):
    """More than one specular point was found on a patch; the first is used."""


# meshes
class ObjParseError(SpecShapeError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyMeshError(SpecShapeError):
    pass


class IsolatedVertexError(SpecShapeError):
    pass


class InvalidParamsError(SpecShapeError):
    pass


# evaluation
class NonUnitInputError(SpecShapeError):
    pass


class NonOrthonormalPairError(SpecShapeError):
    pass


class ZeroMaxCurvatureError(SpecShapeError):
    pass


class EmptyInputError(SpecShapeError):
    pass


class InvalidRangeError(SpecShapeError):
    pass


# cli / pipeline
class ConfigError(SpecShapeError):
    pass

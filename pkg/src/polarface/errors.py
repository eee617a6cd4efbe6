"""Exception hierarchy shared by every polarface module."""


class PolarFaceError(Exception):
    """Base class for all errors raised by polarface."""


class FormatError(PolarFaceError):
    """Malformed on-disk data (PGM, feature, model or ROC files)."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ManifestError(PolarFaceError):
    """Invalid manifest line."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateGeometryError(PolarFaceError):
    """Eye coordinates that do not define a similarity transform."""


class DegenerateImageError(PolarFaceError):
    """Image without usable content (no valid pixels, zero variance)."""


class DimensionMismatchError(PolarFaceError):
    """Vectors, grids or tables whose shapes are incompatible."""


class UnknownSubjectError(PolarFaceError):
    """Subject id not enrolled in a model."""

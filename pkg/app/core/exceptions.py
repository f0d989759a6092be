"""
Exceptions shared by every app.
"""


class SegmentationError(Exception):
    """Base class for errors raised by the segmentation pipeline."""


class MissingArtifactError(SegmentationError, FileNotFoundError):
    """An input file, checkpoint or registered memory does not exist."""


class DataError(SegmentationError, ValueError):
    """Input data violates a contract."""


class DimensionMismatchError(DataError):
    """Two arrays that must share a shape do not."""


class UnsupportedFormatError(DataError):
    """A raster is not a supported single-channel PNG."""


class SplitError(DataError):
    """A manifest cannot be split as requested."""


class UnknownShapeError(DataError):
    """A toy shape class is not one the generator can draw."""


class PaletteError(DataError):
    """A mask label has no palette color."""


class NumericError(SegmentationError, ArithmeticError):
    """A loss or input became non-finite."""


class StageError(SegmentationError):
    """A pipeline stage failed; ``stage`` names which one."""

    def __init__(self, stage, error):
        self.stage = stage
        self.error = error
        super().__init__(f"{stage}: {error}")

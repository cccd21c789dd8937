"""Exception types raised across the package."""


class ZoneplaceError(Exception):
    """Base class for user-facing errors (CLI exit code 2)."""


class FloorplanError(ZoneplaceError):
    pass


class UnknownColor(FloorplanError):
    def __init__(self, row, col, rgb):
        self.row, self.col, self.rgb = int(row), int(col), tuple(int(v) for v in rgb)
        super().__init__(
            f"pixel (row={self.row}, col={self.col}) has unmapped color "
            f"#{self.rgb[0]:02X}{self.rgb[1]:02X}{self.rgb[2]:02X}"
        )


class EmptyImage(FloorplanError):
    pass


class NonPositiveScale(FloorplanError):
    pass


class RegionOutOfRange(ZoneplaceError, IndexError):
    pass


class GenerationStalled(ZoneplaceError):
    pass


class DimensionMismatch(ZoneplaceError, ValueError):
    pass


class NoCandidates(ZoneplaceError):
    pass


class InstanceTooLarge(ZoneplaceError):
    pass


class EmptySweep(ZoneplaceError):
    pass


class InvalidPlacementCell(ZoneplaceError):
    pass

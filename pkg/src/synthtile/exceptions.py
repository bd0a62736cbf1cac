"""Exception types raised across the package."""


class SynthTileError(Exception):
    """Base class for all package errors."""


class ShapeMismatch(SynthTileError, ValueError):
    pass


class EmptyRaster(SynthTileError, ValueError):
    pass


class EmptyReference(SynthTileError, ValueError):
    pass


class EmptyDataset(SynthTileError, ValueError):
    pass


class ZeroVector(SynthTileError, ValueError):
    pass


class LengthMismatch(SynthTileError, ValueError):
    pass


class LayoutInfeasible(SynthTileError):
    """The plan leaves no room for the requested districts; resample the plan."""


class ConfigError(SynthTileError, ValueError):
    pass

"""Exception hierarchy shared across the engine."""


class MediaRankError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(MediaRankError):
    """Vector or matrix dimensions are incompatible."""


class ZeroVectorError(MediaRankError):
    """A zero-norm vector was supplied where a direction is required."""


class EmptyRepositoryError(MediaRankError):
    """An operation needs at least one indexed item."""


class FormatError(MediaRankError):
    """A persisted file is malformed, truncated, or has the wrong magic/version."""


class DuplicateIdError(MediaRankError):
    """Two records share an item identifier."""


class InsufficientDataError(MediaRankError):
    """Too few samples for the requested fit."""


class DegenerateDataError(MediaRankError):
    """Data carries no variance to decompose."""


class ConfigurationError(MediaRankError):
    """Invalid combination of options or missing required configuration."""


class ArgumentError(MediaRankError):
    """An argument value is out of its documented range."""

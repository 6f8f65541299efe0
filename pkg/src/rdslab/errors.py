"""Exception types shared across the package."""


class RdslabError(Exception):
    """Base class for all package errors."""


class SpaceMismatchError(RdslabError):
    """Two objects live on different state spaces."""


class PartitionMismatchError(RdslabError):
    """Two measures are defined over different partitions."""


class NonFiniteCoordinateError(RdslabError):
    """A coordinate is NaN or infinite."""


class NoiseExceedsLevelError(RdslabError):
    """A noise vector is larger than the declared noise level."""


class DegenerateNoiseError(RdslabError):
    """An operation that needs epsilon > 0 was called with epsilon = 0."""


class PartitionTooCoarseError(RdslabError):
    """Cell width too large for the requested noise level."""


class EmptySupportError(RdslabError):
    """A support set is empty where a nonempty one is required."""


class CarrierSplitError(RdslabError):
    """A reference carrier intersects more than one recurrent class."""


class PhasePortraitError(RdslabError):
    """A model's load-time root finding found an unexpected fixed-point structure."""


class ConvergenceError(RdslabError):
    """An iterative solver failed to reach its target residual."""

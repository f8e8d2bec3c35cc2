"""Exception types shared across the toolkit."""


class UdfkitError(Exception):
    """Base class for all toolkit errors."""


class MeshFormatError(UdfkitError):
    """A mesh file could not be parsed; message carries line/offset context."""


class InvalidInputError(UdfkitError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateFrameError(UdfkitError):
    """A local covariance frame has no usable principal directions."""


class EmptySampleError(UdfkitError):
    """All observations were filtered out before a statistic could be formed."""


class InsufficientSampleError(UdfkitError):
    """Sample too small for the requested statistical test."""


class UndefinedMetricError(UdfkitError):
    """A metric's defining set is empty."""


class DivergenceError(UdfkitError):
    """An optimization produced a non-finite loss."""


class CapacityError(UdfkitError):
    """Input exceeds a solver's supported size."""

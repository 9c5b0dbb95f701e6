"""Exception types shared across the package."""


class LowdimError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(LowdimError, ValueError):
    """Tensor or layer shapes do not line up."""


class StateError(LowdimError, RuntimeError):
    """An operation was called in the wrong order (e.g. backward twice)."""


class ValidationError(LowdimError, ValueError):
    """Input values violate a documented contract."""


class DivergenceError(LowdimError, RuntimeError):
    """Training produced a non-finite loss."""


class GenerationError(LowdimError, RuntimeError):
    """A dataset generator could not satisfy its constraints."""

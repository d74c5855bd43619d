"""Exception types shared across the package."""


class IsostatError(Exception):
    """Base class for all errors raised by isostat."""


class DimensionError(IsostatError, ValueError):
    """Operands have incompatible or unsupported dimensions."""


class NotPositiveDefiniteError(IsostatError, ValueError):
    """A bilinear form expected to be SPD is not.

    ``min_eigenvalue`` carries the smallest eigenvalue that was observed.
    """

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class DensityError(IsostatError, ValueError):
    """A density is non-positive or fails normalization where required."""


class ObstructedError(IsostatError):
    """A requested embedding is ruled out by a necessary condition.

    ``condition`` is a short machine-readable name for the violated condition.
    """

    def __init__(self, message, condition=""):
        super().__init__(message)
        self.condition = condition


class ContractError(IsostatError):
    """A construction produced output that fails its verified postcondition."""


class UndefinedInvariant(IsostatError):
    """An invariant is not defined in the requested dimension."""


class TensorFormatError(IsostatError, ValueError):
    """Serialized tensor or report data is malformed."""

"""Exception hierarchy shared by all modules."""


class FolnerError(Exception):
    """Base class for every error raised by this package."""


class SizeCapError(FolnerError):
    """An enumeration would exceed the configured element cap."""


class InvalidModelError(FolnerError, ValueError):
    """Model parameters violate a precondition (non-finite, reducible, ...)."""


class UnsupportedModelError(FolnerError):
    """The requested operation is not defined for this model family."""


class EmptySampleError(FolnerError):
    """A sampling scheme stayed empty after the configured resample limit."""


class DegenerateVarianceError(FolnerError):
    """The standardizing variance is (numerically) zero."""


class DivergentTailError(FolnerError):
    """A mixing-tail series failed the ratio test at the configured horizon."""


class MissingMomentError(FolnerError):
    """A moment required by the chosen regime is not available."""


class NegativeVarianceError(FolnerError):
    """A plugin variance estimate is negative beyond tolerance."""


class ZeroProbabilityError(FolnerError):
    """An observed configuration has probability zero under the model."""


class ConfigError(FolnerError, ValueError):
    """An experiment configuration failed validation.

    The offending key is available as ``key``.
    """

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class TruncationError(FolnerError, ValueError):
    """The truncation radius exceeds the averaging scale."""

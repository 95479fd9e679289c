"""Exception types raised across the package.

Everything derives from ``ValueError`` so callers that only care about
"bad input" can catch that.
"""


class DomainError(ValueError):
    """An argument lies outside the range where the model is defined."""


class SamplingError(ValueError):
    """A numerical grid is too coarse for the integrand (aliasing)."""


class TruncationError(ValueError):
    """An integration window cuts off a non-negligible part of the amplitude."""


class DegenerateStateError(ValueError):
    """The joint amplitude carries no weight inside the integration window."""


class GridMismatchError(ValueError):
    """Two sampled fields do not share the same grid."""


class NoCenterError(ValueError):
    """No fringe center can be located in an image."""


class InsufficientFringesError(ValueError):
    """Too few extrema were found to characterise the fringe pattern."""


class AmbiguousExtremaError(ValueError):
    """Detected extrema do not alternate between maxima and minima."""


class FitError(ValueError):
    """A least-squares problem is degenerate or underdetermined."""


class UnphysicalSlopeError(FitError):
    """The fitted slope of a(d) is not positive."""


class ImageFormatError(ValueError):
    """An image or metadata file is malformed."""


class ConfigError(ValueError):
    """A run configuration file or override is invalid."""

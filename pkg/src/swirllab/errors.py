"""Exception types shared across the package."""


class SwirllabError(Exception):
    """Base class for all package-specific errors."""


class FormatError(SwirllabError):
    """Malformed SWRL1 container or report schema mismatch."""


class GridMismatchError(FormatError):
    """File grid does not match the grid it is being read into."""


class UnsupportedGridError(SwirllabError):
    """Grid lacks the Bessel collocation the spectral machinery requires."""


class ResolutionError(SwirllabError):
    """Requested scale is below what the grid can resolve."""


class RegimeError(SwirllabError):
    """Input is outside the validity regime of the requested operation."""


class OutsideDomainError(SwirllabError):
    """A scan ball does not intersect the computational domain."""


class NumericFault(SwirllabError):
    """Non-finite state or a violated stability constraint."""

"""Error taxonomy shared across the package.

Subclassing ValueError keeps the common errors ergonomic for library users
while letting the CLI map each family to a distinct exit code.
"""


class SlopeError(Exception):
    """Base class for package-specific failures."""


class DimensionError(SlopeError, ValueError):
    """Array shapes or lengths are inconsistent."""


class DomainError(SlopeError, ValueError):
    """A numeric argument is outside its valid domain (NaN, Inf, bad range)."""


class ConfigurationError(SlopeError, ValueError):
    """A configuration is self-inconsistent or insufficient for the request."""


class ParseError(SlopeError, ValueError):
    """An input file cannot be parsed or fails integrity cross-checks."""


class NonconvergenceError(SlopeError, RuntimeError):
    """An iterative routine exhausted its budget without meeting tolerances."""


class SingularityError(SlopeError, ValueError):
    """A linear system required by the computation is (numerically) singular."""


class InvariantError(SlopeError, RuntimeError):
    """An internal consistency check failed; indicates a bug, not bad input."""

"""Exception types raised across the package."""


class DomainError(ValueError):
    """Argument outside the domain of a profile map (e.g. ``|r| >= 1``)."""


class GridTooSmall(ValueError):
    """Sample grid does not cover the window a quadrature needs."""


class NonRealOutput(ValueError):
    """A spectral symbol produced a field with a significant imaginary part."""


class FixedPointDiverged(RuntimeError):
    """The implicit step failed to converge within its iteration budget."""


class ProjectionStalled(RuntimeError):
    """The perimeter projection could not bracket the target perimeter."""


class RadiusCollapse(RuntimeError):
    """A sphere radius would cross zero inside an integration step."""


class ParseError(ValueError):
    """Malformed run configuration."""


class ValidationError(ValueError):
    """Run configuration violates a constraint."""

"""Exception hierarchy shared by the geometry, flow and CLI layers."""


class GeoflowError(Exception):
    """Base class for every error raised by the package."""


class DomainError(GeoflowError, ValueError):
    """A point lies outside the chart domain of a manifold model."""


class DegeneratePlaneError(GeoflowError, ValueError):
    """Two vectors span a (numerically) degenerate 2-plane."""


class DegenerateCurveError(GeoflowError, ValueError):
    """A discrete curve has a node with vanishing speed."""


class FrameUndefinedError(GeoflowError, ValueError):
    """The Frenet frame is undefined at every node (discrete geodesic)."""


class ResampleError(GeoflowError, RuntimeError):
    """Arclength resampling produced an invalid curve."""


class NotARampError(GeoflowError, ValueError):
    """The curve is not a ramp on a product with a circle factor."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class DegenerateDenominatorError(GeoflowError, ArithmeticError):
    """The warped-product rate has a vanishing denominator at the max-curvature node."""


class ConfigError(GeoflowError, ValueError):
    """Invalid run configuration. ``errors`` lists every violation found."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))

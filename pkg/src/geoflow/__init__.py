"""Curve shortening flow on Riemannian manifolds.

Modules
-------
manifold
    metric models (flat space, S^3 and H^3 charts, products with a circle,
    evolving conformal and warped metrics) with Christoffel symbols and
    curvature tensors
curve
    discrete closed curves: speed, tangent, covariant derivatives, Frenet frame
flow
    explicit time stepping with identity monitors and stop detection
spaceform_ode
    curvature/torsion ODE of helices in space forms and its closed forms
ramp
    ramps on base x S^1 and geodesic search
evolving_metric
    flows under metrics that evolve to keep the maximal curvature in check
cli
    the ``geoflow`` command
"""

__version__ = "0.1.0"

from .curve import DiscreteCurve, frenet, geometry, ramp_height, resample_arclength
from .flow import FlowRun, FlowSettings, run
from .manifold import (
    Circle,
    ConformalEvolving,
    Euclidean,
    Product,
    SpaceForm,
    WarpedCircle,
    make_model,
)

__all__ = [
    "__version__",
    "Circle",
    "ConformalEvolving",
    "DiscreteCurve",
    "Euclidean",
    "FlowRun",
    "FlowSettings",
    "Product",
    "SpaceForm",
    "WarpedCircle",
    "frenet",
    "geometry",
    "make_model",
    "ramp_height",
    "resample_arclength",
    "run",
]

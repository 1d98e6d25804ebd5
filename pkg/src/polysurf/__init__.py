"""Surface area of convex polytopes under rotation-invariant log-concave measures."""

from .estimators import RadialMeasure, SurfaceAreaEstimator
from .extremal import expected_surface_exact, lower_bound_rhs, solve_rho
from .measure import MeasureModel, ball, gaussian, parse_family, power
from .polytope import Polytope, circumscribed_random, parse, standard_shape
from .surface import (
    SurfaceEstimate,
    hyperplane_measure,
    polygon_exact_2d,
    shell_oracle_mc,
    surface_mc,
    volume_mc,
)

__version__ = "0.1.0"

__all__ = [
    "MeasureModel", "Polytope", "RadialMeasure", "SurfaceAreaEstimator", "SurfaceEstimate",
    "ball", "circumscribed_random", "expected_surface_exact", "gaussian", "hyperplane_measure",
    "lower_bound_rhs", "parse", "parse_family", "polygon_exact_2d", "power", "shell_oracle_mc",
    "solve_rho", "standard_shape", "surface_mc", "volume_mc",
]

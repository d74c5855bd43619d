"""Statistical models, their Fisher metric, Amari-Chentsov tensor and connections."""

from .connection import ConnectionField, ConnectionSample, connection, connection_field, duality_defect, metric_derivative
from .core import (
    EPS_BOUND,
    FiniteSpace,
    GeometryAtPoint,
    ParametricModel,
    QuadratureSpace,
    ac_tensor,
    fisher_metric,
    geometry,
    reparametrize,
)
from .divergence import DivergenceFunction, divergence_geometry, kl_divergence, quadratic_divergence
from .families import (
    cap_model,
    cap_point,
    cap_sphere_model,
    gaussian_model,
    model_from_spec,
    parse_expression,
    quadrant_model,
    round_sphere_metric,
    sphere_point,
    weak_potential_model,
)

__all__ = [
    "EPS_BOUND",
    "ConnectionField",
    "ConnectionSample",
    "DivergenceFunction",
    "FiniteSpace",
    "GeometryAtPoint",
    "ParametricModel",
    "QuadratureSpace",
    "ac_tensor",
    "cap_model",
    "cap_point",
    "cap_sphere_model",
    "connection",
    "connection_field",
    "divergence_geometry",
    "duality_defect",
    "fisher_metric",
    "gaussian_model",
    "geometry",
    "kl_divergence",
    "metric_derivative",
    "model_from_spec",
    "parse_expression",
    "quadrant_model",
    "quadratic_divergence",
    "reparametrize",
    "round_sphere_metric",
    "sphere_point",
    "weak_potential_model",
]

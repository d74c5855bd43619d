"""Monotone invariants of symmetric 3-tensors and embedding obstructions."""

from .core import (
    InvariantReport,
    NullPlaneResult,
    OptResult,
    a1,
    a2,
    comass1,
    comass2,
    comass3,
    compute_invariants,
    find_null_plane,
    lambda_k,
    norm_primitive,
    unit_with_value,
)
from .obstruction import (
    InvariantSuprema,
    ObstructionVerdict,
    cap_suprema,
    gaussian_product_suprema,
    obstruction_check,
    suprema_from_spec,
)
from .optimize import DEFAULT_CONFIG, OptimizerConfig

__all__ = [
    "DEFAULT_CONFIG",
    "InvariantReport",
    "InvariantSuprema",
    "ObstructionVerdict",
    "cap_suprema",
    "gaussian_product_suprema",
    "obstruction_check",
    "suprema_from_spec",
    "NullPlaneResult",
    "OptResult",
    "OptimizerConfig",
    "a1",
    "a2",
    "comass1",
    "comass2",
    "comass3",
    "compute_invariants",
    "find_null_plane",
    "lambda_k",
    "norm_primitive",
    "unit_with_value",
]

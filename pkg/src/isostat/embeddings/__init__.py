"""Explicit isostatistical maps and numerical pullback certification."""

from .cap import (
    CapCurve,
    CapEmbeddingParams,
    DirectionField,
    SmallTorus,
    SublemmaResult,
    build_torus,
    circle_search,
    constraint_plane,
    curve_into_cap4,
    level_angles,
    product_into_cap,
    sublemma_direction,
    sublemma_formula_candidate,
)
from .linear import (
    CanonicalForm2D,
    CanonicalForm314,
    canonical_form_2d,
    canonical_form_3_14,
    cubic_sum_embedding,
    embed_2d_cross,
    embed_constant_structure,
    embed_line,
    embed_trace_type,
    max_scale,
    null_embedding,
    scale_compose,
)
from .maps import CapTarget, EmbeddingMap, FlatTarget, PullbackReport, sample_box, verify_pullback

__all__ = [
    "CanonicalForm2D",
    "CanonicalForm314",
    "CapCurve",
    "CapEmbeddingParams",
    "CapTarget",
    "DirectionField",
    "EmbeddingMap",
    "FlatTarget",
    "PullbackReport",
    "SmallTorus",
    "SublemmaResult",
    "build_torus",
    "canonical_form_2d",
    "canonical_form_3_14",
    "circle_search",
    "constraint_plane",
    "cubic_sum_embedding",
    "curve_into_cap4",
    "embed_2d_cross",
    "embed_constant_structure",
    "embed_line",
    "embed_trace_type",
    "level_angles",
    "max_scale",
    "null_embedding",
    "product_into_cap",
    "sample_box",
    "scale_compose",
    "sublemma_direction",
    "sublemma_formula_candidate",
    "verify_pullback",
]

"""Necessary conditions for isostatistical embeddings from pointwise monotone invariants.

If ``f: M -> N`` is isostatistical then at every point the restriction of the
target tensor to ``df(T_xM)`` is the source tensor, so each monotone
invariant of the source at ``x`` is at most the one of the target at ``f(x)``.
Comparing suprema over sampled points can therefore only prove
impossibility, never existence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import TensorFormatError
from ..symtensor import SymTensor3, full_norm, orthonormal_components
from .core import InvariantReport, comass1, norm_primitive
from .optimize import OptimizerConfig

MONOTONE = ("comass1", "norm", "norm1")


@dataclass(frozen=True)
class InvariantSuprema:
    """Suprema of the pointwise monotone invariants over sampled points.

    ``unbounded`` lists invariants observed to grow without bound along the
    sampling sequence; ``profile`` keeps the per-sample values for plotting.
    """

    label: str
    values: dict
    unbounded: frozenset = frozenset()
    profile: dict = field(default_factory=dict)


def pointwise_invariants(T: SymTensor3, cfg: OptimizerConfig | None = None) -> dict:
    """``comass1``, ``norm`` and ``norm1`` of a tensor given in an orthonormal frame."""
    return {"comass1": comass1(T, cfg).value, "norm": full_norm(T), "norm1": norm_primitive(T)}


def suprema_from_tensor(T: SymTensor3, label: str = "tensor", cfg=None) -> InvariantSuprema:
    """A constant structure ``(R^n, g0, T)``."""
    return InvariantSuprema(label, pointwise_invariants(T, cfg))


def suprema_from_report(report: InvariantReport, label: str = "report") -> InvariantSuprema:
    vals = {"comass1": report.comass1, "norm": report.norm_full, "norm1": report.norm_primitive}
    return InvariantSuprema(label, vals)


def _from_samples(label, xs, rows, growth: float = 100.0) -> InvariantSuprema:
    vals = {k: max(r[k] for r in rows) for k in MONOTONE}
    unbounded = set()
    for k in MONOTONE:
        seq = np.array([r[k] for r in rows])
        if seq.size >= 3 and np.all(np.diff(seq) > 0) and seq[-1] > growth * max(seq[0], 1e-300):
            unbounded.add(k)
    profile = {k: (list(map(float, xs)), [float(r[k]) for r in rows]) for k in MONOTONE}
    return InvariantSuprema(label, vals, frozenset(unbounded), profile)


def cap_boundary_points(N: int, deltas) -> list[np.ndarray]:
    """Probability vectors with ``p_1 = delta`` and the remaining mass spread evenly."""
    pts = []
    for d in deltas:
        p = np.full(N, (1.0 - d) / (N - 1))
        p[0] = d
        pts.append(p)
    return pts


def cap_suprema(N: int, deltas=None, cfg: OptimizerConfig | None = None) -> InvariantSuprema:
    """Sample Cap^N along a sequence approaching the boundary (``min p_i = delta``).

    Invariants are taken in Fisher-orthonormal frames. The sequence starts at
    the barycenter, so ``delta`` decreases along the profile.
    """
    from ..models import cap_model, cap_point, geometry

    if deltas is None:
        deltas = np.logspace(-1, -8, 8)
    deltas = [1.0 / N] + [float(d) for d in deltas if d < 1.0 / N]
    model = cap_model(N)
    rows = []
    for p in cap_boundary_points(N, deltas):
        geo = geometry(model, cap_point(p))
        rows.append(pointwise_invariants(orthonormal_components(geo.metric, geo.tensor), cfg))
    return _from_samples(f"cap:{N}", deltas, rows)


def gaussian_frame_tensor(mu: float = 0.0, sigma: float = 1.0) -> SymTensor3:
    """Amari-Chentsov tensor of the normal family at ``(mu, sigma)`` in a Fisher-orthonormal frame."""
    from ..models import gaussian_model, geometry

    geo = geometry(gaussian_model(), [mu, sigma])
    return orthonormal_components(geo.metric, geo.tensor)


def direct_sum(tensors) -> SymTensor3:
    """Block-diagonal tensor of a product statistical manifold."""
    tensors = list(tensors)
    n = sum(t.dim for t in tensors)
    D = np.zeros((n, n, n))
    o = 0
    for t in tensors:
        d = t.dim
        D[o : o + d, o : o + d, o : o + d] = t.dense
        o += d
    return SymTensor3.from_dense(D)


def gaussian_product_suprema(
    m: int, grid=None, cfg: OptimizerConfig | None = None
) -> InvariantSuprema:
    """Suprema over a (mu, sigma) grid for the m-fold product of normal families.

    Every factor is evaluated at the same grid point; the invariants are
    constant in (mu, sigma), which the spread in ``profile`` documents.
    """
    if m < 1:
        raise ValueError("gaussian-product needs m >= 1")
    if grid is None:
        grid = [(mu, s) for mu in (-2.0, 0.0, 3.0) for s in (0.25, 1.0, 4.0)]
    rows = []
    for mu, s in grid:
        T = gaussian_frame_tensor(mu, s)
        rows.append(pointwise_invariants(direct_sum([T] * m), cfg))
    return _from_samples(f"gaussian-product:{m}", list(range(len(grid))), rows, growth=np.inf)


@dataclass(frozen=True)
class ObstructionVerdict:
    verdict: str
    reason: str
    violations: tuple = ()
    source: InvariantSuprema | None = None
    target: InvariantSuprema | None = None

    @property
    def impossible(self) -> bool:
        return self.verdict == "impossible"

    def to_json_dict(self) -> dict:
        return {
            "schema": "1",
            "verdict": self.verdict,
            "reason": self.reason,
            "violations": [dict(v) for v in self.violations],
            "source": None if self.source is None else {"label": self.source.label, "sup": self.source.values, "unbounded": sorted(self.source.unbounded)},
            "target": None if self.target is None else {"label": self.target.label, "sup": self.target.values, "unbounded": sorted(self.target.unbounded)},
        }


def _as_suprema(obj, cfg) -> InvariantSuprema:
    if isinstance(obj, InvariantSuprema):
        return obj
    if isinstance(obj, InvariantReport):
        return suprema_from_report(obj)
    if isinstance(obj, SymTensor3):
        return suprema_from_tensor(obj, cfg=cfg)
    if isinstance(obj, str):
        return suprema_from_spec(obj, cfg)
    raise TypeError(f"cannot read invariant suprema from {type(obj).__name__}")


def obstruction_check(source, target, tol: float = 1e-6, cfg: OptimizerConfig | None = None) -> ObstructionVerdict:
    """Compare monotone-invariant suprema of source and target.

    Returns ``"impossible"`` with the violated inequalities when a source
    supremum exceeds the target's by more than ``tol`` (relative to the
    target value), else ``"no obstruction found"``.
    """
    src = _as_suprema(source, cfg)
    tgt = _as_suprema(target, cfg)
    bad = []
    for k in MONOTONE:
        a, b = src.values[k], tgt.values[k]
        src_unb = k in src.unbounded and k not in tgt.unbounded
        if src_unb or a > b + tol * max(1.0, abs(b)):
            bad.append({"invariant": k, "source_sup": a, "target_sup": b, "source_unbounded": k in src.unbounded})
    if not bad:
        return ObstructionVerdict("no obstruction found", "all sampled source suprema within target suprema", (), src, tgt)
    first = bad[0]
    if first["source_unbounded"]:
        reason = f"{first['invariant']} unbounded on source"
    else:
        reason = f"{first['invariant']}: source sup {first['source_sup']:.6g} > target sup {first['target_sup']:.6g}"
    return ObstructionVerdict("impossible", reason, tuple(bad), src, tgt)


def suprema_from_spec(spec: str, cfg: OptimizerConfig | None = None) -> InvariantSuprema:
    """Parse ``cap:N``, ``gaussian-product:m``, ``report:PATH`` or ``tensor:PATH``."""
    kind, _, arg = spec.partition(":")
    if not arg:
        raise TensorFormatError(f"manifold spec {spec!r} needs the form kind:argument")
    if kind in ("cap", "gaussian-product"):
        try:
            k = int(arg)
        except ValueError:
            raise TensorFormatError(f"manifold spec {spec!r}: {arg!r} is not an integer") from None
        if kind == "cap":
            if k < 2:
                raise TensorFormatError("cap:N needs N >= 2")
            return cap_suprema(k, cfg=cfg)
        if k < 1:
            raise TensorFormatError("gaussian-product:m needs m >= 1")
        return gaussian_product_suprema(k, cfg=cfg)
    if kind in ("report", "tensor"):
        data = json.loads(Path(arg).read_text())
        if kind == "report":
            return suprema_from_report(InvariantReport.from_json_dict(data), label=spec)
        return suprema_from_tensor(SymTensor3.from_json_dict(data), label=spec, cfg=cfg)
    raise TensorFormatError(f"unknown manifold kind {kind!r}")


__all__ = [
    "InvariantSuprema",
    "ObstructionVerdict",
    "cap_boundary_points",
    "cap_suprema",
    "direct_sum",
    "gaussian_frame_tensor",
    "gaussian_product_suprema",
    "obstruction_check",
    "pointwise_invariants",
    "suprema_from_report",
    "suprema_from_spec",
    "suprema_from_tensor",
]

"""Embedding maps between statistical spaces and numerical pullback verification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import DimensionError, TensorFormatError
from ..symtensor import SymTensor3, cap_tensor, pullback_linear


@dataclass(frozen=True)
class FlatTarget:
    """``(R^N, g0, T)`` with a constant tensor."""

    tensor: SymTensor3

    @property
    def dim(self) -> int:
        return self.tensor.dim

    def metric_at(self, x) -> np.ndarray:
        return np.eye(self.dim)

    def tensor_at(self, x) -> SymTensor3:
        return self.tensor


@dataclass(frozen=True)
class CapTarget:
    """The orthant ``R^N_+`` with ``g0`` and ``sum 2/x_i dx_i^3``.

    Its restriction to the sphere of radius 2 is Cap^N in the chart
    ``x_i = 2 sqrt(p_i)``; smaller spheres are the factors of a product.
    """

    dim: int
    radius: float = 2.0

    def metric_at(self, x) -> np.ndarray:
        return np.eye(self.dim)

    def tensor_at(self, x) -> SymTensor3:
        return cap_tensor(x)


class EmbeddingMap:
    """A map ``theta -> target point`` with its Jacobian.

    ``matrix`` is set for linear maps (``eval = matrix @ theta``); ``meta``
    holds construction records such as computed pullbacks.
    """

    def __init__(
        self,
        source_dim: int,
        target,
        eval: Callable[[np.ndarray], np.ndarray],
        jacobian: Callable[[np.ndarray], np.ndarray],
        name: str = "map",
        matrix: np.ndarray | None = None,
        meta: dict | None = None,
    ):
        self.source_dim = int(source_dim)
        self.target = target
        self._eval = eval
        self._jac = jacobian
        self.name = name
        self.matrix = matrix
        self.meta = dict(meta or {})

    @classmethod
    def linear(cls, L, target, name: str = "linear", meta: dict | None = None) -> "EmbeddingMap":
        L = np.array(L, dtype=float, ndmin=2)
        if L.shape[0] != target.dim:
            raise DimensionError(f"matrix has {L.shape[0]} rows but the target has dimension {target.dim}")
        L.setflags(write=False)
        return cls(L.shape[1], target, lambda th: L @ th, lambda th: L, name, L, meta)

    def _theta(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float).ravel()
        if th.size != self.source_dim:
            raise DimensionError(f"{self.name}: expected a {self.source_dim}-vector, got {th.size}")
        return th

    def __call__(self, theta) -> np.ndarray:
        return np.asarray(self._eval(self._theta(theta)), dtype=float)

    def jacobian(self, theta) -> np.ndarray:
        return np.array(self._jac(self._theta(theta)), dtype=float, ndmin=2).reshape(self.target.dim, self.source_dim)

    def pullback_metric(self, theta) -> np.ndarray:
        J = self.jacobian(theta)
        return J.T @ self.target.metric_at(self(theta)) @ J

    def pullback_tensor(self, theta) -> SymTensor3:
        return pullback_linear(self.target.tensor_at(self(theta)), self.jacobian(theta))

    def to_json_dict(self) -> dict:
        """Linear maps only: the matrix and the target tensor."""
        if self.matrix is None:
            raise TensorFormatError(f"{self.name}: only linear maps serialize as a matrix")
        out = {"schema": "1", "kind": "linear", "name": self.name, "matrix": self.matrix.tolist()}
        if isinstance(self.target, FlatTarget):
            out["target"] = {"kind": "flat", "tensor": self.target.tensor.to_json_dict()}
        else:
            out["target"] = {"kind": "cap", "dim": self.target.dim}
        return out

    @classmethod
    def from_json_dict(cls, data) -> "EmbeddingMap":
        try:
            if data.get("kind") != "linear":
                raise TensorFormatError("only linear embedding maps can be read back")
            t = data["target"]
            if t["kind"] == "flat":
                target = FlatTarget(SymTensor3.from_json_dict(t["tensor"]))
            elif t["kind"] == "cap":
                target = CapTarget(int(t["dim"]))
            else:
                raise TensorFormatError(f"unknown target kind {t['kind']!r}")
            return cls.linear(np.array(data["matrix"], dtype=float), target, data.get("name", "linear"))
        except (KeyError, TypeError, AttributeError) as exc:
            raise TensorFormatError(f"malformed embedding map: {exc}") from None


@dataclass
class PullbackReport:
    max_metric_error: float
    max_tensor_error: float
    sample_points: list = field(default_factory=list)
    metric_errors: list = field(default_factory=list)
    tensor_errors: list = field(default_factory=list)
    rank_deficient: list = field(default_factory=list)

    def ok(self, metric_tol: float, tensor_tol: float) -> bool:
        return self.max_metric_error <= metric_tol and self.max_tensor_error <= tensor_tol and not self.rank_deficient

    def to_json_dict(self) -> dict:
        return {
            "schema": "1",
            "max_metric_error": self.max_metric_error,
            "max_tensor_error": self.max_tensor_error,
            "samples": len(self.sample_points),
            "rank_deficient": [np.asarray(p).tolist() for p in self.rank_deficient],
        }


def _field(value):
    if callable(value) and not isinstance(value, SymTensor3):
        return value
    return lambda theta: value


def verify_pullback(f: EmbeddingMap, expected_g, expected_T, points) -> PullbackReport:
    """Compare ``J^T G J`` and ``T(J., J., J.)`` with the expected fields at each point.

    ``expected_g`` / ``expected_T`` are constant values (matrix, SymTensor3)
    or callables of ``theta``. Errors are max-abs over components.
    """
    g_of = _field(expected_g)
    T_of = _field(expected_T)
    pts, me, te, bad = [], [], [], []
    for theta in points:
        theta = np.asarray(theta, dtype=float).ravel()
        J = f.jacobian(theta)
        if np.linalg.matrix_rank(J) < f.source_dim:
            bad.append(theta)
        g = f.pullback_metric(theta)
        T = f.pullback_tensor(theta)
        eg = np.asarray(g_of(theta), dtype=float).reshape(g.shape)
        eT = T_of(theta)
        eT = eT.dense if isinstance(eT, SymTensor3) else np.asarray(eT, dtype=float)
        pts.append(theta)
        me.append(float(np.max(np.abs(g - eg))))
        te.append(float(np.max(np.abs(T.dense - eT))))
    return PullbackReport(max(me, default=0.0), max(te, default=0.0), pts, me, te, bad)


def sample_box(dim: int, count: int, lo: float = -1.0, hi: float = 1.0, seed: int = 0) -> np.ndarray:
    """Seeded uniform sample points in ``[lo, hi]^dim``."""
    return np.random.default_rng(seed).uniform(lo, hi, size=(count, dim))

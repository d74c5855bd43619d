"""Parametric density families and their Fisher metric and Amari-Chentsov tensor."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import DensityError, DimensionError
from ..symtensor import MetricMatrix, SymTensor3, symmetrize

# smallest admissible probability of an atom; keeps evaluation off the boundary
EPS_BOUND = 1e-9


@dataclass(frozen=True)
class FiniteSpace:
    """``n_atoms`` elementary events with reference weights (counting measure by default)."""

    n_atoms: int
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n_atoms < 1:
            raise DimensionError("a finite sample space needs at least one atom")
        if self.weights is not None and len(self.weights) != self.n_atoms:
            raise DimensionError("one weight per atom is required")

    def rule(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        w = np.ones(self.n_atoms) if self.weights is None else np.asarray(self.weights, float)
        return np.arange(self.n_atoms, dtype=float), w


@dataclass(frozen=True)
class QuadratureSpace:
    """The real line, integrated by Gauss-Legendre on a parameter-dependent window.

    ``locate(theta) -> (center, scale)``; the window is
    ``center +- half_width * scale``. Nodes are fixed by the evaluation point
    so finite differences in ``theta`` are taken at fixed sample points.
    """

    locate: Callable[[np.ndarray], tuple[float, float]]
    n_nodes: int = 200
    half_width: float = 12.0

    def rule(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        c, s = self.locate(theta)
        x, w = np.polynomial.legendre.leggauss(self.n_nodes)
        r = self.half_width * s
        return c + r * x, r * w


@dataclass(frozen=True)
class ParametricModel:
    """A family ``theta -> p(theta, .)`` of densities on a sample space.

    ``density(theta, omega)`` is vectorized over the sample points ``omega``.
    ``score(theta, omega)``, when given, returns the ``m x len(omega)`` array
    of ``d/dtheta_a ln p``; otherwise central differences are used.
    ``normalization`` is ``"probability"`` or ``"weak"``; weak models skip
    only the normalization check.
    """

    param_dim: int
    sample_space: FiniteSpace | QuadratureSpace
    density: Callable[[np.ndarray, np.ndarray], np.ndarray]
    domain: Callable[[np.ndarray], bool] = lambda theta: True
    normalization: str = "probability"
    score: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    name: str = "model"

    def __post_init__(self):
        if self.param_dim < 1:
            raise DimensionError("param_dim must be >= 1")
        if self.normalization not in ("probability", "weak"):
            raise ValueError(f"unknown normalization mode {self.normalization!r}")

    def point(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).ravel()
        if theta.size != self.param_dim:
            raise DimensionError(f"{self.name}: expected {self.param_dim} parameters, got {theta.size}")
        if not self.domain(theta):
            raise DensityError(f"{self.name}: parameter {theta.tolist()} outside the domain")
        return theta

    def total_mass(self, theta) -> float:
        theta = self.point(theta)
        omega, w = self.sample_space.rule(theta)
        return float(np.dot(w, self.density(theta, omega)))

    def check_normalization(self, theta, tol: float = 1e-8) -> float:
        """Deviation ``|int p - 1|``; raises when a probability model exceeds ``tol``."""
        dev = abs(self.total_mass(theta) - 1.0)
        if self.normalization == "probability" and dev > tol:
            raise DensityError(f"{self.name}: total mass deviates from 1 by {dev:.3e}")
        return dev


def fd_steps(theta: np.ndarray, rel: float = 1e-5) -> np.ndarray:
    """Per-coordinate central-difference steps ``rel * max(1, |theta_a|)``."""
    return rel * np.maximum(1.0, np.abs(theta))


def _scores(model: ParametricModel, theta: np.ndarray):
    omega, w = model.sample_space.rule(theta)
    p = np.asarray(model.density(theta, omega), dtype=float)
    if np.any(~np.isfinite(p)) or np.any(p <= 0):
        bad = int(np.argmin(p))
        raise DensityError(f"{model.name}: density not positive at sample point {omega[bad]!r}")
    if model.score is not None:
        S = np.asarray(model.score(theta, omega), dtype=float)
        return S, p, w
    m = model.param_dim
    h = fd_steps(theta)
    S = np.empty((m, p.size))
    for a in range(m):
        e = np.zeros(m)
        e[a] = h[a]
        tp, tm = theta + e, theta - e
        if not (model.domain(tp) and model.domain(tm)):
            raise DensityError(f"{model.name}: difference step leaves the domain at {theta.tolist()}")
        lp = np.log(model.density(tp, omega))
        lm = np.log(model.density(tm, omega))
        S[a] = (lp - lm) / (2 * h[a])
    return S, p, w


@dataclass(frozen=True)
class GeometryAtPoint:
    point: np.ndarray
    metric: MetricMatrix
    tensor: SymTensor3


def fisher_metric(model: ParametricModel, theta) -> MetricMatrix:
    """``g_ab = int (d_a ln p)(d_b ln p) p``."""
    theta = model.point(theta)
    S, p, w = _scores(model, theta)
    G = (S * (p * w)) @ S.T
    return MetricMatrix(0.5 * (G + G.T))


def ac_tensor(model: ParametricModel, theta) -> SymTensor3:
    """``T_abc = int (d_a ln p)(d_b ln p)(d_c ln p) p``."""
    theta = model.point(theta)
    S, p, w = _scores(model, theta)
    T = np.einsum("an,bn,cn,n->abc", S, S, S, p * w, optimize=True)
    return SymTensor3.from_dense(symmetrize(T))


def geometry(model: ParametricModel, theta) -> GeometryAtPoint:
    """Fisher metric and Amari-Chentsov tensor from one set of scores."""
    theta = model.point(theta)
    S, p, w = _scores(model, theta)
    pw = p * w
    G = (S * pw) @ S.T
    T = np.einsum("an,bn,cn,n->abc", S, S, S, pw, optimize=True)
    return GeometryAtPoint(theta, MetricMatrix(0.5 * (G + G.T)), SymTensor3.from_dense(symmetrize(T)))


def reparametrize(
    model: ParametricModel,
    phi: Callable[[np.ndarray], np.ndarray],
    dim: int,
    domain: Callable[[np.ndarray], bool] | None = None,
    name: str | None = None,
) -> ParametricModel:
    """The family ``s -> p(phi(s), .)``; scores of the result use central differences.

    With ``dim`` smaller than ``model.param_dim`` this is the restriction to
    the submanifold parametrized by ``phi``.
    """

    def density(s, omega):
        return model.density(np.asarray(phi(s), float), omega)

    def dom(s):
        t = np.asarray(phi(s), float)
        return model.domain(t) and (domain is None or domain(s))

    space = model.sample_space
    if isinstance(space, QuadratureSpace):
        space = QuadratureSpace(lambda s: model.sample_space.locate(np.asarray(phi(s), float)), space.n_nodes, space.half_width)
    return ParametricModel(dim, space, density, dom, model.normalization, None, name or f"{model.name}|phi")

"""Divergence functions and the metric/tensor they induce at the diagonal."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import DensityError
from ..symtensor import MetricMatrix, SymTensor3, symmetrize
from .core import GeometryAtPoint, ParametricModel


@dataclass(frozen=True)
class DivergenceFunction:
    """``rho(theta, theta') >= 0`` vanishing exactly on the diagonal."""

    rho: Callable[[np.ndarray, np.ndarray], float]
    param_dim: int
    domain: Callable[[np.ndarray], bool] = lambda theta: True
    name: str = "divergence"

    def __call__(self, x, y) -> float:
        return float(self.rho(np.asarray(x, float), np.asarray(y, float)))

    def check_pairs(self, pairs, tol: float = 1e-12) -> list[tuple]:
        """Sampled pairs violating ``rho >= 0`` (or ``rho = 0`` on the diagonal)."""
        bad = []
        for x, y in pairs:
            v = self(x, y)
            if np.array_equal(np.asarray(x, float), np.asarray(y, float)):
                if abs(v) > tol:
                    bad.append((x, y, v))
            elif v <= 0:
                bad.append((x, y, v))
        return bad


def quadratic_divergence(m: int) -> DivergenceFunction:
    """``rho = |theta - theta'|^2 / 2``, inducing the identity metric and zero tensor."""
    return DivergenceFunction(lambda x, y: 0.5 * float(np.sum((x - y) ** 2)), m, name="quadratic")


def kl_divergence(model: ParametricModel) -> DivergenceFunction:
    """Relative entropy ``rho(x, y) = int p_x ln(p_x / p_y)`` on the sample rule at ``x``."""

    def rho(x, y):
        omega, w = model.sample_space.rule(x)
        px = model.density(x, omega)
        py = model.density(y, omega)
        if np.any(px <= 0) or np.any(py <= 0):
            raise DensityError(f"{model.name}: density not positive in relative entropy")
        return float(np.dot(w, px * np.log(px / py)))

    return DivergenceFunction(rho, model.param_dim, model.domain, f"kl[{model.name}]")


def _hessians(rho, theta, h):
    """Second derivatives in the first slot, in the second slot, and the +/- third mixed derivatives."""
    m = theta.size
    E = np.eye(m) * h
    H1 = np.empty((m, m))
    for a, b in itertools.product(range(m), repeat=2):
        s = 0.0
        for sa, sb in itertools.product((1, -1), repeat=2):
            s += sa * sb * rho(theta + sa * E[a] + sb * E[b], theta)
        H1[a, b] = s / (4 * h * h)
    # D1[a,b,c] = d_{x_a} d_{x_b} d_{y_c} rho, D2[a,b,c] = d_{y_a} d_{y_b} d_{x_c} rho
    D1 = np.empty((m, m, m))
    D2 = np.empty((m, m, m))
    for a, b, c in itertools.product(range(m), repeat=3):
        s1 = s2 = 0.0
        for sa, sb, sc in itertools.product((1, -1), repeat=3):
            sgn = sa * sb * sc
            s1 += sgn * rho(theta + sa * E[a] + sb * E[b], theta + sc * E[c])
            s2 += sgn * rho(theta + sc * E[c], theta + sa * E[a] + sb * E[b])
        D1[a, b, c] = s1 / (8 * h**3)
        D2[a, b, c] = s2 / (8 * h**3)
    return H1, D1, D2


def divergence_geometry(div: DivergenceFunction, theta, h: float = 1e-3) -> GeometryAtPoint:
    """Metric and tensor of a divergence at ``(theta, theta)``.

    ``g_ab = d_{x_a} d_{x_b} rho`` and
    ``T_abc = -d_{y_c} d_{x_a} d_{x_b} rho + d_{x_c} d_{y_a} d_{y_b} rho``,
    by central differences at steps ``h`` and ``h/2`` combined by Richardson
    extrapolation (both have ``O(h^2)`` leading error).
    """
    theta = np.asarray(theta, dtype=float).ravel()
    if not div.domain(theta):
        raise DensityError(f"{div.name}: parameter outside the domain")
    rho = div.rho
    Ha, D1a, D2a = _hessians(rho, theta, h)
    Hb, D1b, D2b = _hessians(rho, theta, h / 2)
    H = (4 * Hb - Ha) / 3
    D1 = (4 * D1b - D1a) / 3
    D2 = (4 * D2b - D2a) / 3
    T = symmetrize(D2 - D1)
    return GeometryAtPoint(theta, MetricMatrix(0.5 * (H + H.T)), SymTensor3.from_dense(T))

"""The one-parameter family of connections ``nabla^t = nabla^F + t T``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import DensityError
from .core import ParametricModel, fd_steps, fisher_metric, geometry


@dataclass(frozen=True)
class ConnectionField:
    """``christoffel(theta)[k, i, j] = Gamma^k_ij``."""

    t: float
    christoffel: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ConnectionSample:
    t: float
    point: np.ndarray
    christoffel: np.ndarray
    metric: np.ndarray
    metric_derivative: np.ndarray


def metric_derivative(model: ParametricModel, theta, rel: float = 1e-4) -> np.ndarray:
    """``dg[i, j, k] = d_i g_jk``: central differences at steps ``h`` and ``h/2``, Richardson-combined."""
    theta = model.point(theta)
    m = theta.size
    h = fd_steps(theta, rel)
    dg = np.empty((m, m, m))
    for i in range(m):
        est = []
        for hi in (h[i], h[i] / 2):
            e = np.zeros(m)
            e[i] = hi
            if not (model.domain(theta + e) and model.domain(theta - e)):
                raise DensityError(f"{model.name}: metric difference step leaves the domain")
            gp = fisher_metric(model, theta + e).entries
            gm = fisher_metric(model, theta - e).entries
            est.append((gp - gm) / (2 * hi))
        dg[i] = (4 * est[1] - est[0]) / 3
    return dg


def connection(model: ParametricModel, t: float, theta, rel: float = 1e-4) -> ConnectionSample:
    """Christoffel symbols ``Gamma(t)^k_ij = Gamma(LC)^k_ij + t g^{kl} T_ijl`` at ``theta``."""
    geo = geometry(model, theta)
    g = geo.metric.entries
    dg = metric_derivative(model, geo.point, rel)
    # first kind: Gamma_{ij,l} = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    first = 0.5 * (dg + np.transpose(dg, (1, 0, 2)) - np.transpose(dg, (1, 2, 0)))
    first = first + t * geo.tensor.dense
    gamma = np.einsum("kl,ijl->kij", np.linalg.inv(g), first)
    gamma = 0.5 * (gamma + np.transpose(gamma, (0, 2, 1)))
    return ConnectionSample(float(t), geo.point, gamma, g, dg)


def connection_field(model: ParametricModel, t: float) -> ConnectionField:
    return ConnectionField(float(t), lambda theta: connection(model, t, theta).christoffel)


def duality_defect(model: ParametricModel, t: float, theta) -> float:
    """Max over coordinate fields of ``|X<Y,Z> - <nabla^t_X Y, Z> - <Y, nabla^-t_X Z>|``.

    The left side uses an independent central difference of the metric at
    a different step from the one used inside the connections.
    """
    cp = connection(model, t, theta)
    cm = connection(model, -t, theta)
    g = cp.metric
    lower_p = np.einsum("kl,kij->ijl", g, cp.christoffel)  # <nabla_i e_j, e_l>
    lower_m = np.einsum("kl,kij->ijl", g, cm.christoffel)
    dg = metric_derivative(model, theta, rel=1.5e-4)
    rhs = lower_p + np.transpose(lower_m, (0, 2, 1))
    return float(np.max(np.abs(dg - rhs)))

"""Deterministic local optimizers on spheres, products of spheres and Stiefel manifolds.

Everything works on dense ``n x n x n`` arrays. Global searches seed local
ascent from a fixed sphere grid plus seeded random points, so results are
reproducible for a given :class:`OptimizerConfig`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs shared by every optimizer in :mod:`isostat.invariants`.

    ``grid_resolution`` is the number of points per great circle of the
    seeding grid; ``multistart_count`` is how many of the best grid points
    are refined by local ascent.
    """

    multistart_count: int = 8
    grid_resolution: int = 32
    max_iterations: int = 300
    tolerance: float = 1e-10
    seed: int = 2007

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if self.multistart_count < 1:
            raise ValueError("multistart_count must be >= 1")
        if self.grid_resolution < 2:
            raise ValueError("grid_resolution must be >= 2")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    def rng(self, salt: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])


DEFAULT_CONFIG = OptimizerConfig()


def _normalize_rows(X: np.ndarray) -> np.ndarray:
    return X / np.linalg.norm(X, axis=-1, keepdims=True)


def sphere_grid(n: int, resolution: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Seed points on the unit sphere of R^n, one per row.

    n = 1, 2, 3 use exact deterministic grids (signs, equiangular circle,
    Fibonacci lattice). Higher dimensions use signed basis vectors, signed
    pairwise diagonals and seeded Gaussian directions.
    """
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        ang = 2 * np.pi * np.arange(resolution) / resolution
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if n == 3:
        m = max(8, resolution * resolution // 2)
        i = np.arange(m) + 0.5
        z = 1 - 2 * i / m
        r = np.sqrt(1 - z * z)
        phi = np.pi * (1 + 5**0.5) * i
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    eye = np.eye(n)
    pts = [eye, -eye]
    iu, ju = np.triu_indices(n, 1)
    for s in (1.0, -1.0):
        for t in (1.0, -1.0):
            pts.append((s * eye[iu] + t * eye[ju]) / math.sqrt(2))
    rng = rng if rng is not None else np.random.default_rng(0)
    pts.append(_normalize_rows(rng.standard_normal((resolution * n * 2, n))))
    return np.vstack(pts)


def cubic_values(Td: np.ndarray, X: np.ndarray) -> np.ndarray:
    """``T(x, x, x)`` for every row ``x`` of ``X``."""
    n = Td.shape[0]
    W = (X @ Td.reshape(n, n * n)).reshape(-1, n, n)
    return np.einsum("mjk,mj,mk->m", W, X, X)


def _tangent_basis(x: np.ndarray) -> np.ndarray:
    n = x.size
    q, _ = np.linalg.qr(np.column_stack([x, np.eye(n)]))
    return q[:, 1:n]


def ascend_cubic(Td: np.ndarray, x0: np.ndarray, cfg: OptimizerConfig) -> tuple[float, np.ndarray]:
    """Local maximum of ``T(x,x,x)`` on the unit sphere from ``x0``.

    Armijo projected-gradient ascent followed by Riemannian Newton polishing
    (a Newton step is only taken when it increases the objective).
    """
    n = x0.size
    x = x0 / np.linalg.norm(x0)
    if n == 1:
        return float(Td[0, 0, 0] * x[0] ** 3), x
    M = np.einsum("ijk,k->ij", Td, x)
    g = M @ x
    f = float(g @ x)
    step = 0.25 / (1.0 + float(np.max(np.abs(Td))))
    for _ in range(cfg.max_iterations):
        rg = 3.0 * (g - f * x)
        gn2 = float(rg @ rg)
        if gn2 <= (cfg.tolerance * 1e-2) ** 2:
            break
        # Newton polish near a nondegenerate maximum
        B = _tangent_basis(x)
        H = B.T @ (6.0 * M - 3.0 * f * np.eye(n)) @ B
        newton_ok = False
        try:
            ev = np.linalg.eigvalsh(H)
            if ev[-1] < 0:
                xi = -np.linalg.solve(H, B.T @ rg)
                xn = x + B @ xi
                xn /= np.linalg.norm(xn)
                Mn = np.einsum("ijk,k->ij", Td, xn)
                gnew = Mn @ xn
                fn = float(gnew @ xn)
                if fn >= f - 1e-15 * max(1.0, abs(f)):
                    x, M, g, f = xn, Mn, gnew, fn
                    newton_ok = True
        except np.linalg.LinAlgError:
            pass
        if newton_ok:
            continue
        while True:
            xn = x + step * rg
            xn /= np.linalg.norm(xn)
            Mn = np.einsum("ijk,k->ij", Td, xn)
            gnew = Mn @ xn
            fn = float(gnew @ xn)
            if fn >= f + 1e-4 * step * gn2:
                x, M, g, f = xn, Mn, gnew, fn
                step *= 2.0
                break
            step *= 0.5
            if step < 1e-18:
                return f, x
    return f, x


def _dedup(cands: list[tuple[float, np.ndarray]], tol: float = 1e-7) -> list[tuple[float, np.ndarray]]:
    out: list[tuple[float, np.ndarray]] = []
    for val, x in cands:
        if all(np.linalg.norm(x - y) > tol for _, y in out):
            out.append((val, x))
    return out


def maximize_cubic(
    Td: np.ndarray,
    cfg: OptimizerConfig,
    seeds: np.ndarray | None = None,
    grid: np.ndarray | None = None,
    n_starts: int | None = None,
) -> list[tuple[float, np.ndarray]]:
    """Distinct local maxima of ``T(x,x,x)`` on the sphere, best first.

    Explicit ``seeds`` are always refined; the ``n_starts`` best grid points
    are refined in addition. Ties keep seed order.
    """
    n = Td.shape[0]
    if grid is None:
        grid = sphere_grid(n, cfg.grid_resolution, cfg.rng(n))
    vals = cubic_values(Td, grid)
    k = cfg.multistart_count if n_starts is None else n_starts
    order = np.argsort(-vals, kind="stable")[:k]
    starts = [] if seeds is None else [np.asarray(s, float) for s in seeds]
    starts += [grid[i] for i in order]
    cands = [ascend_cubic(Td, s, cfg) for s in starts]
    # stable sort keeps seed ordering among equal values
    cands.sort(key=lambda c: -c[0])
    return _dedup(cands)


def circle_critical_points(Td2: np.ndarray) -> list[tuple[float, np.ndarray]]:
    """All critical points of a binary cubic on the unit circle, best first.

    Critical points solve ``y p_x - x p_y = 0`` which is a binary cubic; its
    roots are found by polynomial root finding.
    """
    a = Td2[0, 0, 0]
    b = Td2[0, 0, 1]
    c = Td2[0, 1, 1]
    d = Td2[1, 1, 1]
    # p(x,y) = a x^3 + 3b x^2 y + 3c x y^2 + d y^3; with t = y/x the critical
    # condition y p_x - x p_y = 0 reads 3c t^3 + (6b-3d) t^2 + (3a-6c) t - 3b = 0
    poly = np.trim_zeros(np.array([3 * c, 6 * b - 3 * d, 3 * a - 6 * c, -3 * b]), "f")
    # axis directions are always candidates (covers the root at t = infinity)
    pts = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    if poly.size > 1:
        for t in np.roots(poly):
            if abs(t.imag) < 1e-7 * (1.0 + abs(t)):
                v = np.array([1.0, t.real])
                pts.append(v / np.linalg.norm(v))
    out = []
    for v in pts:
        for s in (1.0, -1.0):
            w = s * v
            val = a * w[0] ** 3 + 3 * b * w[0] ** 2 * w[1] + 3 * c * w[0] * w[1] ** 2 + d * w[1] ** 3
            out.append((float(val), w))
    out.sort(key=lambda c: -c[0])
    return out


def retract_qr(X: np.ndarray) -> np.ndarray:
    """QR retraction with the sign convention ``diag(R) > 0``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 2 and X.shape[1] <= 4 and X.shape[0] >= X.shape[1]:
        # thin frames: Gram-Schmidt with reorthogonalization gives the same Q, faster
        Q = np.empty_like(X)
        ok = True
        for j in range(X.shape[1]):
            v = X[:, j].copy()
            for _ in range(2):
                if j:
                    v -= Q[:, :j] @ (Q[:, :j].T @ v)
            nv = math.sqrt(float(v @ v))
            if not nv > 1e-10 * max(1.0, float(np.abs(X[:, j]).max())):
                ok = False
                break
            Q[:, j] = v / nv
        if ok:
            return Q
    q, r = np.linalg.qr(X)
    s = np.sign(np.diag(r))
    s[s == 0] = 1.0
    return q * s


def random_frame(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    return retract_qr(rng.standard_normal((n, k)))


def manifold_ascent(fun, X0: np.ndarray, cfg: OptimizerConfig, mode: str = "stiefel"):
    """Armijo gradient ascent of ``fun(X) -> (value, euclidean_grad)``.

    ``mode="stiefel"``: orthonormal columns, QR retraction.
    ``mode="spheres"``: each column independently on its unit sphere.
    """

    def project(X, G):
        if mode == "stiefel":
            S = X.T @ G
            return G - X @ (0.5 * (S + S.T))
        return G - X * np.sum(X * G, axis=0)

    def retract(Y):
        if mode == "stiefel":
            return retract_qr(Y)
        return Y / np.linalg.norm(Y, axis=0)

    X = retract(np.asarray(X0, float))
    f, G = fun(X)
    step = 0.5
    for _ in range(cfg.max_iterations * 4):
        R = project(X, G)
        gn2 = float(np.sum(R * R))
        if gn2 <= (cfg.tolerance * 1e-2) ** 2:
            break
        accepted = False
        while step > 1e-18:
            Xn = retract(X + step * R)
            fn, Gn = fun(Xn)
            if fn >= f + 1e-4 * step * gn2:
                X, f, G = Xn, fn, Gn
                step *= 2.0
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
    return f, X

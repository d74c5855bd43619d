"""Comasses, lambda_k, A^1/A^2, the primitive norm and null planes of a 3-tensor."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import least_squares, minimize

from ..errors import DimensionError, UndefinedInvariant
from ..symtensor import SymTensor3, full_norm, project_trace, pullback_linear
from .optimize import (
    cubic_values,
    DEFAULT_CONFIG,
    OptimizerConfig,
    ascend_cubic,
    circle_critical_points,
    manifold_ascent,
    maximize_cubic,
    random_frame,
    retract_qr,
    sphere_grid,
)


class OptResult(NamedTuple):
    """Optimal value with the point (vector, vector tuple or frame) attaining it."""

    value: float
    certificate: np.ndarray


def _cfg(cfg):
    return DEFAULT_CONFIG if cfg is None else cfg


def _cubic_max(Td: np.ndarray, cfg: OptimizerConfig, seeds=None, n_starts=None):
    n = Td.shape[0]
    if n == 2 and seeds is None:
        crit = circle_critical_points(Td)
        val, x = crit[0]
        fv, fx = ascend_cubic(Td, x, cfg)
        return [(fv, fx)] if fv >= val else [(val, x)]
    return maximize_cubic(Td, cfg, seeds=seeds, n_starts=n_starts)


def comass1(T: SymTensor3, cfg: OptimizerConfig | None = None) -> OptResult:
    """``max T(x,x,x)`` over the unit sphere with its maximizer."""
    cfg = _cfg(cfg)
    n = T.dim
    if not np.any(T.dense):
        return OptResult(0.0, np.eye(n)[0])
    val, x = _cubic_max(T.dense, cfg)[0]
    return OptResult(float(val), x)


def _alternating(fun_update, X: list[np.ndarray], value, cfg: OptimizerConfig):
    f = value(X)
    for _ in range(cfg.max_iterations * 4):
        X = fun_update(X)
        fn = value(X)
        if fn - f <= cfg.tolerance * 1e-3 * max(1.0, abs(fn)):
            f = max(f, fn)
            break
        f = fn
    return f, X


def comass2(T: SymTensor3, cfg: OptimizerConfig | None = None, seed_vector=None) -> OptResult:
    """``max T(x,y,y)`` over unit ``x, y``; certificate is the 2 x n array ``[x, y]``.

    Block ascent: the best ``x`` for fixed ``y`` is ``T(., y, y)`` normalized,
    the best ``y`` for fixed ``x`` is a top eigenvector of ``T(x, ., .)``.
    """
    cfg = _cfg(cfg)
    Td = T.dense
    n = T.dim
    if not np.any(Td):
        e = np.eye(n)[0]
        return OptResult(0.0, np.array([e, e]))

    def value(X):
        x, y = X
        return float(np.einsum("ijk,i,j,k->", Td, x, y, y))

    def update(X):
        x, y = X
        v = np.einsum("ijk,j,k->i", Td, y, y)
        nv = np.linalg.norm(v)
        if nv > 0:
            x = v / nv
        w, V = np.linalg.eigh(np.einsum("ijk,i->jk", Td, x))
        y = V[:, -1] if np.dot(V[:, -1], y) >= 0 else -V[:, -1]
        return [x, y]

    seeds = []
    if seed_vector is None:
        seed_vector = comass1(T, cfg).certificate
    seeds.append(np.asarray(seed_vector, float))
    grid = sphere_grid(n, cfg.grid_resolution, cfg.rng(100 + n))
    norms = np.linalg.norm(np.einsum("ijk,mj,mk->mi", Td, grid, grid), axis=1)
    for i in np.argsort(-norms, kind="stable")[: cfg.multistart_count]:
        seeds.append(grid[i])
    best = None
    for y in seeds:
        X = update([y, y])
        f, X = _alternating(update, X, value, cfg)
        if best is None or f > best[0]:
            best = (f, X)
    return OptResult(float(best[0]), np.array(best[1]))


def comass3(T: SymTensor3, cfg: OptimizerConfig | None = None, seed_vector=None) -> OptResult:
    """``max T(x,y,z)`` over unit ``x, y, z`` by cyclic exact block updates."""
    cfg = _cfg(cfg)
    Td = T.dense
    n = T.dim
    if not np.any(Td):
        e = np.eye(n)[0]
        return OptResult(0.0, np.array([e, e, e]))

    def value(X):
        return float(np.einsum("ijk,i,j,k->", Td, *X))

    def unit(v, fallback):
        nv = np.linalg.norm(v)
        return v / nv if nv > 0 else fallback

    def update(X):
        x, y, z = X
        x = unit(np.einsum("ijk,j,k->i", Td, y, z), x)
        y = unit(np.einsum("ijk,i,k->j", Td, x, z), y)
        z = unit(np.einsum("ijk,i,j->k", Td, x, y), z)
        return [x, y, z]

    if seed_vector is None:
        seed_vector = comass1(T, cfg).certificate
    starts = [[np.asarray(seed_vector, float)] * 3]
    rng = cfg.rng(200 + n)
    for _ in range(cfg.multistart_count):
        starts.append(list(_unit_rows(rng.standard_normal((3, n)))))
    best = None
    for X in starts:
        f, X = _alternating(update, X, value, cfg)
        if best is None or f > best[0]:
            best = (f, X)
    return OptResult(float(best[0]), np.array(best[1]))


def _unit_rows(X):
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def unit_with_value(T: SymTensor3, c: float, cfg: OptimizerConfig | None = None) -> np.ndarray:
    """Unit ``u`` with ``T(u,u,u) = c`` for ``|c| <= comass1(T)``.

    Bisects along a great circle from the comass1 maximizer ``x`` to ``-x``;
    the cubic form sweeps from ``+M`` to ``-M`` on that path.
    """
    cfg = _cfg(cfg)
    n = T.dim
    m, x = comass1(T, cfg)
    if c > m:
        c_use = m
    elif c < -m:
        c_use = -m
    else:
        c_use = c
    if abs(c_use - m) <= 0.0:
        return x
    if n == 1:
        return -x if c_use <= 0 and c_use == -m else x
    # a direction orthogonal to x; the path is cos(t) x + sin(t) y, t in [0, pi]
    y = _complete(x[:, None])[:, 0]
    Td = T.dense

    def phi(t):
        u = math.cos(t) * x + math.sin(t) * y
        return float(np.einsum("ijk,i,j,k->", Td, u, u, u)) - c_use

    lo, hi = 0.0, math.pi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phi(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16:
            break
    t = lo if abs(phi(lo)) <= abs(phi(hi)) else hi
    return math.cos(t) * x + math.sin(t) * y


# -- lambda_k -----------------------------------------------------------------


def _lambda_grid(k: int, cfg: OptimizerConfig) -> np.ndarray:
    if k == 2:
        return sphere_grid(2, 3 * cfg.grid_resolution)
    if k == 3:
        return sphere_grid(3, max(8, cfg.grid_resolution * 3 // 4))
    eye = np.eye(k)
    pts = np.vstack([eye, -eye, cfg.rng(800 + k).standard_normal((8 * cfg.grid_resolution * k, k))])
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _soft_max_objective(Td: np.ndarray, Y: np.ndarray, beta: float):
    """Negated log-sum-exp smoothing of ``U -> max_y T(Uy,Uy,Uy)`` over grid rows ``y``."""
    n = Td.shape[0]
    Tm = Td.reshape(n, n * n)

    def fun(U):
        V = Y @ U.T
        W = np.einsum("mjk,mj->mk", (V @ Tm).reshape(-1, n, n), V)
        f = np.sum(W * V, axis=1)
        z = beta * f
        zmax = float(np.max(z))
        e = np.exp(z - zmax)
        tot = float(e.sum())
        F = (zmax + math.log(tot)) / beta
        G = 3.0 * (W * (e / tot)[:, None]).T @ Y
        return -F, -G

    return fun


def _restrict_dense(Td: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Components of ``T(U., U., U.)`` by three successive contractions."""
    A = np.tensordot(Td, U, axes=([2], [0]))
    A = np.tensordot(A, U, axes=([1], [0]))
    return np.tensordot(A, U, axes=([0], [0])).transpose(2, 1, 0)


def _restricted_comass(Td: np.ndarray, U: np.ndarray, cfg: OptimizerConfig) -> float:
    return float(_cubic_max(_restrict_dense(Td, U), cfg)[0][0])


def _zero_plane_polish(Td: np.ndarray, U: np.ndarray):
    """Newton-type refinement of a 2-frame toward ``T|U = 0``."""
    n = Td.shape[0]

    def fun(m):
        return _plane_residual(Td, retract_qr(m.reshape(n, 2)))

    sol = least_squares(fun, U.ravel(), xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200 * n)
    return retract_qr(sol.x.reshape(n, 2))


def lambda_k(
    T: SymTensor3, k: int, cfg: OptimizerConfig | None = None, seeds=None
) -> OptResult:
    """Min over k-dimensional subspaces of the comass of the restriction.

    The certificate is an ``n x k`` orthonormal basis of the best subspace
    found. ``seeds`` are extra starting frames.
    """
    cfg = _cfg(cfg)
    n = T.dim
    if not 1 <= k <= n:
        raise DimensionError(f"k must lie in 1..{n}, got {k}")
    if k == 1:
        u = unit_with_value(T, 0.0, cfg)
        return OptResult(0.0, u[:, None])
    if k == n:
        return OptResult(comass1(T, cfg).value, np.eye(n))
    if not np.any(T.dense):
        return OptResult(0.0, np.eye(n)[:, :k])
    Td = T.dense
    scale = full_norm(T)
    Y = _lambda_grid(k, cfg)
    rng = cfg.rng(400 + 17 * n + k)
    starts = [retract_qr(np.asarray(s, float)) for s in (seeds or [])]
    starts.append(np.eye(n)[:, :k])
    n_plain = (cfg.multistart_count + 1) // 2
    starts += [random_frame(n, k, rng) for _ in range(n_plain)]
    # the other half: the lowest grid maxima among many screened random frames
    pool = [random_frame(n, k, rng) for _ in range(16 * cfg.multistart_count)]
    screen = [float(np.max(cubic_values(Td, Y @ U.T))) for U in pool]
    starts += [pool[i] for i in np.argsort(screen, kind="stable")[: cfg.multistart_count - n_plain]]
    stage_cfg = OptimizerConfig(
        max_iterations=max(10, cfg.max_iterations // 30),
        tolerance=1e-6 * scale,
        seed=cfg.seed,
    )
    # continuation in the smoothing parameter, then exact inner maximization
    objectives = [_soft_max_objective(Td, Y, c / scale) for c in (10.0, 100.0, 1000.0)]
    found = []
    for U in starts:
        for fun in objectives:
            _, U = manifold_ascent(fun, U, stage_cfg, mode="stiefel")
        found.append((_restricted_comass(Td, U, cfg), U))
    found.sort(key=lambda c: c[0])
    best = None
    for val, U in found[:2]:
        # exchange rounds: add the exact inner maximizers to the grid
        for _ in range(3):
            Tk = _restrict_dense(Td, U)
            ys = np.array([y for _, y in _cubic_max(Tk, cfg)])
            fun = _soft_max_objective(Td, np.vstack([Y, ys]), 1e4 / scale)
            _, Un = manifold_ascent(fun, U, stage_cfg, mode="stiefel")
            vn = _restricted_comass(Td, Un, cfg)
            if vn >= val:
                break
            U, val = Un, vn
        if k == 2 and val < 1e-2 * scale:
            Up = _zero_plane_polish(Td, U)
            vp = _restricted_comass(Td, Up, cfg)
            if vp < val:
                U, val = Up, vp
        if best is None or val < best[0]:
            best = (val, U)
    for S in starts[: len(seeds or [])]:
        val = _restricted_comass(Td, S, cfg)
        if val < best[0]:
            best = (val, S)
    if k == 2 and k * (n - k) <= _POLISH_DIM:
        best = _grassmann_polish(Td, best[1], best[0], cfg)
    return OptResult(float(max(best[0], 0.0)), best[1])


_POLISH_DIM = 4


def _grassmann_polish(Td: np.ndarray, U: np.ndarray, val: float, cfg: OptimizerConfig):
    """Nelder-Mead on the exact (nonsmooth) restricted comass in a chart around ``U``."""
    n, k = U.shape
    P = _complete(U)

    def frame(m):
        return retract_qr(U + P @ m.reshape(n - k, k))

    def fun(m):
        # closed-form circle maximum; the final value is re-certified below
        return circle_critical_points(_restrict_dense(Td, frame(m)))[0][0]

    d = (n - k) * k
    simplex = np.vstack([np.zeros(d), 1e-2 * np.eye(d)])
    opts = {"xatol": 1e-10, "fatol": 1e-12 * max(val, 1e-300), "initial_simplex": simplex, "maxfev": 400 * d}
    sol = minimize(fun, np.zeros(d), method="Nelder-Mead", options=opts)
    Un = frame(sol.x)
    vn = _restricted_comass(Td, Un, cfg)
    return (vn, Un) if vn < val else (val, U)


# -- orthonormal-frame maxima ---------------------------------------------------


def _stiefel_max(Td, n, p, fun, cfg, salt):
    rng = cfg.rng(salt)
    eye = np.eye(n)
    starts = [eye[:, :p]]
    starts += [random_frame(n, p, rng) for _ in range(cfg.multistart_count)]
    best = None
    for X0 in starts:
        f, X = manifold_ascent(fun, X0, cfg, mode="stiefel")
        if best is None or f > best[0]:
            best = (f, X)
    return OptResult(float(best[0]), best[1])


def a1(T: SymTensor3, cfg: OptimizerConfig | None = None) -> OptResult:
    """Max of ``T(x,y,z)`` over orthonormal triples (needs n >= 3)."""
    cfg = _cfg(cfg)
    n = T.dim
    if n < 3:
        raise UndefinedInvariant(f"A^1 needs dimension >= 3, got {n}")
    Td = T.dense

    def fun(X):
        x, y, z = X.T
        gx = np.einsum("ijk,j,k->i", Td, y, z)
        return float(gx @ x), np.column_stack(
            [gx, np.einsum("ijk,i,k->j", Td, x, z), np.einsum("ijk,i,j->k", Td, x, y)]
        )

    res = _stiefel_max(Td, n, 3, fun, cfg, 500 + n)
    return OptResult(max(res.value, 0.0), res.certificate)


def a2(T: SymTensor3, cfg: OptimizerConfig | None = None) -> OptResult:
    """Max of ``T(x,y,y)`` over orthonormal pairs (needs n >= 2)."""
    cfg = _cfg(cfg)
    n = T.dim
    if n < 2:
        raise UndefinedInvariant(f"A^2 needs dimension >= 2, got {n}")
    Td = T.dense

    def fun(X):
        x, y = X.T
        gx = np.einsum("ijk,j,k->i", Td, y, y)
        gy = 2.0 * np.einsum("ijk,i,k->j", Td, x, y)
        return float(gx @ x), np.column_stack([gx, gy])

    res = _stiefel_max(Td, n, 2, fun, cfg, 600 + n)
    return OptResult(max(res.value, 0.0), res.certificate)


def norm_primitive(T: SymTensor3) -> float:
    """Norm of the primitive (trace-free) part of ``T``."""
    return full_norm(project_trace(T).primitive)


# -- null planes ------------------------------------------------------------------


@dataclass(frozen=True)
class NullPlaneResult:
    basis: np.ndarray
    residual: float
    success: bool


_W2 = np.array([1.0, math.sqrt(3.0), math.sqrt(3.0), 1.0])


def _plane_residual(Td, U):
    u, w = U.T
    Mu = np.einsum("ijk,i->jk", Td, u)
    r = np.array([u @ Mu @ u, u @ Mu @ w, w @ Mu @ w, np.einsum("ijk,i,j,k->", Td, w, w, w)])
    return _W2 * r


def find_null_plane(T: SymTensor3, cfg: OptimizerConfig | None = None, max_starts: int | None = None) -> NullPlaneResult:
    """Orthonormal pair spanning a plane on which ``T`` (nearly) vanishes.

    Minimizes the full norm of the restriction to ``span(u, w)`` by
    least squares over unconstrained 2-frames mapped through QR.
    """
    cfg = _cfg(cfg)
    n = T.dim
    if n < 2:
        raise DimensionError("a 2-plane needs dimension >= 2")
    Td = T.dense
    if n == 2:
        U = np.eye(2)
        r = float(np.linalg.norm(_plane_residual(Td, U)))
        return NullPlaneResult(U, r, r <= cfg.tolerance)
    if not np.any(Td):
        return NullPlaneResult(np.eye(n)[:, :2], 0.0, True)
    rng = cfg.rng(700 + n)
    scale = full_norm(T)
    best = None
    for _ in range(max_starts or 4 * cfg.multistart_count):
        M0 = rng.standard_normal((n, 2))

        def fun(m):
            return _plane_residual(Td, retract_qr(m.reshape(n, 2))) / scale

        sol = least_squares(fun, M0.ravel(), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        U = retract_qr(sol.x.reshape(n, 2))
        r = float(np.linalg.norm(_plane_residual(Td, U)))
        if best is None or r < best[1]:
            best = (U, r)
        if r <= cfg.tolerance:
            break
    return NullPlaneResult(best[0], best[1], best[1] <= cfg.tolerance)


# -- reports ------------------------------------------------------------------------


@dataclass
class InvariantReport:
    """Monotone and reverse-monotone invariants of one tensor, with certificates."""

    dim: int
    comass1: float
    comass2: float
    comass3: float
    norm_full: float
    norm_primitive: float
    lam: dict[int, float]
    a1: float | None
    a2: float | None
    certificates: dict = field(default_factory=dict)

    def check_ordering(self, slack: float = 1e-6) -> list[str]:
        """Violations of ``m1 <= m2 <= m3 <= norm`` and the lambda chain."""
        bad = []
        chain = [self.comass1, self.comass2, self.comass3, self.norm_full]
        for a, b, name in zip(chain, chain[1:], ("m1<=m2", "m2<=m3", "m3<=norm")):
            if a > b + slack:
                bad.append(name)
        ks = sorted(self.lam)
        if self.lam.get(1, 0.0) != 0.0:
            bad.append("lambda1==0")
        for k1, k2 in zip(ks, ks[1:]):
            if self.lam[k1] > self.lam[k2] + slack:
                bad.append(f"lambda{k1}<=lambda{k2}")
        if ks and abs(self.lam[ks[-1]] - self.comass1) > slack:
            bad.append("lambda_n==m1")
        return bad

    def to_json_dict(self) -> dict:
        certs = {k: np.asarray(v).tolist() for k, v in sorted(self.certificates.items())}
        return {
            "schema": "1",
            "dim": self.dim,
            "comass": [self.comass1, self.comass2, self.comass3],
            "norm": self.norm_full,
            "norm1": self.norm_primitive,
            "lambda": {str(k): v for k, v in sorted(self.lam.items())},
            "a1": self.a1,
            "a2": self.a2,
            "certificates": certs,
        }

    @classmethod
    def from_json_dict(cls, data) -> "InvariantReport":
        from ..errors import TensorFormatError

        try:
            m1, m2, m3 = (float(v) for v in data["comass"])
            lam = {int(k): float(v) for k, v in data.get("lambda", {}).items()}
            return cls(
                dim=int(data.get("dim", max(lam) if lam else 0)),
                comass1=m1,
                comass2=m2,
                comass3=m3,
                norm_full=float(data["norm"]),
                norm_primitive=float(data["norm1"]),
                lam=lam,
                a1=None if data.get("a1") is None else float(data["a1"]),
                a2=None if data.get("a2") is None else float(data["a2"]),
                certificates=dict(data.get("certificates", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise TensorFormatError(f"malformed invariant report: {exc}") from None


def compute_invariants(
    T: SymTensor3, cfg: OptimizerConfig | None = None, lambdas: bool = True
) -> InvariantReport:
    """All invariants of ``T``.

    The comass1 maximizer seeds comass2/comass3 and each lambda_{k+1}
    subspace seeds lambda_k, so the reported chains hold by construction up
    to optimizer tolerance.
    """
    cfg = _cfg(cfg)
    n = T.dim
    m1 = comass1(T, cfg)
    m2 = comass2(T, cfg, seed_vector=m1.certificate)
    m3 = comass3(T, cfg, seed_vector=m1.certificate)
    certs = {"comass1": m1.certificate, "comass2": m2.certificate, "comass3": m3.certificate}
    lam: dict[int, float] = {}
    if lambdas:
        lam[n] = m1.value
        certs[f"lambda{n}"] = np.eye(n)
        prev = np.eye(n)
        for k in range(n - 1, 1, -1):
            res = lambda_k(T, k, cfg, seeds=[prev[:, :k]])
            lam[k] = min(res.value, lam[k + 1])
            certs[f"lambda{k}"] = res.certificate
            prev = np.column_stack([res.certificate, _complete(res.certificate)])
        if n > 1:
            res = lambda_k(T, 1, cfg)
            lam[1] = 0.0
            certs["lambda1"] = res.certificate
    vals = {}
    for name, fn in (("a1", a1), ("a2", a2)):
        try:
            r = fn(T, cfg)
            vals[name] = r.value
            certs[name] = r.certificate
        except UndefinedInvariant:
            vals[name] = None
    return InvariantReport(
        dim=n,
        comass1=m1.value,
        comass2=max(m2.value, m1.value),
        comass3=max(m3.value, m2.value, m1.value),
        norm_full=full_norm(T),
        norm_primitive=norm_primitive(T),
        lam=lam,
        a1=vals["a1"],
        a2=vals["a2"],
        certificates=certs,
    )


def _complete(U: np.ndarray) -> np.ndarray:
    n, k = U.shape
    q, _ = np.linalg.qr(np.column_stack([U, np.eye(n)]))
    return q[:, k:n]


def restrict(T: SymTensor3, U) -> SymTensor3:
    return pullback_linear(T, U)

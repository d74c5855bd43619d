"""Linear isostatistical maps between flat statistical spaces and 2-D/3.14-type normal forms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from ..errors import ContractError, DimensionError, NotPositiveDefiniteError, ObstructedError
from ..invariants import DEFAULT_CONFIG, OptimizerConfig, comass1, unit_with_value
from ..invariants.optimize import ascend_cubic, circle_critical_points
from ..symtensor import SymTensor3, full_norm, pullback_linear, standard_tensor, trace_type_tensor
from .maps import EmbeddingMap, FlatTarget


def _orth_complement(V: np.ndarray, N: int) -> np.ndarray:
    """Orthonormal basis of the complement of the column span of ``V`` in R^N."""
    V = np.asarray(V, dtype=float).reshape(N, -1)
    q, r = np.linalg.qr(np.column_stack([V, np.eye(N)]))
    rank = int(np.linalg.matrix_rank(V)) if V.size else 0
    return q[:, rank:N]


def embed_trace_type(w, v, tol: float = 1e-12) -> EmbeddingMap:
    """Isometry ``L: R^k -> R^N`` with ``L^T v = w`` so that ``L^* T^v = T^w``.

    Obstructed unless ``N >= k`` and ``|w| <= |v|``; when ``N == k`` the map
    is orthogonal and ``|w| = |v|`` is needed as well.
    """
    w = np.asarray(w, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    k, N = w.size, v.size
    nw, nv = float(np.linalg.norm(w)), float(np.linalg.norm(v))
    scale = max(1.0, nv)
    if N < k:
        raise ObstructedError(f"target dimension {N} < source dimension {k}", "dimension")
    if nw > nv + tol * scale:
        raise ObstructedError(f"|w| = {nw:.12g} exceeds |v| = {nv:.12g}", "trace_norm")
    if N == k and abs(nw - nv) > tol * scale:
        raise ObstructedError(
            f"equal dimensions force an orthogonal map, which needs |w| = |v| (got {nw:.12g} vs {nv:.12g})",
            "trace_norm_equal_dim",
        )
    target = FlatTarget(trace_type_tensor(v))
    if nv == 0.0:
        return EmbeddingMap.linear(np.eye(N)[:, :k], target, "trace-type")
    vh = v / nv
    u = w / nw if nw > 0 else np.eye(k)[0]
    ratio = min(nw / nv, 1.0)
    rest = _orth_complement(vh[:, None], N)
    image_u = ratio * vh
    used = 0
    if ratio < 1.0 and N > k:
        image_u = image_u + math.sqrt(1.0 - ratio * ratio) * rest[:, 0]
        used = 1
    U_perp = _orth_complement(u[:, None], k)
    images = rest[:, used : used + k - 1]
    # maps u to image_u and u-perp isometrically into the complement of span(v, image_u)
    L = np.outer(image_u, u) + images @ U_perp.T
    res = float(np.max(np.abs(L.T @ v - w))) if k else 0.0
    if res > 1e-10 * scale:
        raise ContractError(f"trace-type construction residual {res:.3e}")
    return EmbeddingMap.linear(L, target, "trace-type")


def embed_line(c: float, T_target: SymTensor3, cfg: OptimizerConfig | None = None, tol: float = 1e-9) -> EmbeddingMap:
    """Isometric line ``x -> x u`` with ``T_target(u,u,u) = c``.

    Possible exactly when ``|c| <= comass1(T_target)``.
    """
    cfg = cfg or DEFAULT_CONFIG
    m = comass1(T_target, cfg).value
    if abs(c) > m + tol * max(1.0, m):
        raise ObstructedError(f"|c| = {abs(c):.12g} exceeds comass1 = {m:.12g}", "comass1")
    if T_target.dim == 1 and abs(abs(c) - m) > tol * max(1.0, m):
        raise ObstructedError("a line in a line must carry value +-comass1", "line_in_line")
    u = unit_with_value(T_target, float(c), cfg)
    got = T_target.cubic(u)
    if abs(got - c) > max(tol, 1e-12) * max(1.0, m):
        raise ContractError(f"line direction misses the value: {got!r} vs {c!r}")
    return EmbeddingMap.linear(u[:, None], FlatTarget(T_target), "line", meta={"value": got})


@dataclass(frozen=True)
class CanonicalForm2D:
    rotation: np.ndarray
    coords: tuple
    zero: bool = False


def canonical_form_2d(T: SymTensor3, cfg: OptimizerConfig | None = None) -> CanonicalForm2D:
    """Oriented orthonormal frame with ``T_111 = comass1(T)`` and ``T_112 = 0``.

    Returns the rotation (columns are the frame) and ``(T_111, T_122, T_222)``.
    For ``T = 0`` the identity and zeros are returned with ``zero=True``.
    """
    if T.dim != 2:
        raise DimensionError("canonical 2-D coordinates need a tensor on R^2")
    cfg = cfg or DEFAULT_CONFIG
    if not np.any(T.dense):
        return CanonicalForm2D(np.eye(2), (0.0, 0.0, 0.0), True)
    val, x = circle_critical_points(T.dense)[0]
    fv, fx = ascend_cubic(T.dense, x, cfg)
    if fv >= val:
        x = fx
    R = np.column_stack([x, [-x[1], x[0]]])
    C = pullback_linear(T, R)
    return CanonicalForm2D(R, (C[1, 1, 1], C[1, 2, 2], C[2, 2, 2]))


@dataclass(frozen=True)
class CanonicalForm314:
    """``T = a_1 x_1^3 + 3 x_1 sum_{i>1} a_i x_i^2 + (terms free of x_1)`` in ``basis``.

    ``coeffs[i]`` are the components ``T_{1ii}`` in the new frame and
    ``residual`` is the block of components with no index 1.
    """

    basis: np.ndarray
    coeffs: np.ndarray
    residual: np.ndarray

    def reassemble(self) -> SymTensor3:
        n = self.basis.shape[0]
        D = np.zeros((n, n, n))
        D[1:, 1:, 1:] = self.residual
        for i, a in enumerate(self.coeffs):
            if i == 0:
                D[0, 0, 0] = a
            else:
                D[0, i, i] = D[i, 0, i] = D[i, i, 0] = a
        Bt = self.basis
        return SymTensor3.from_dense(np.einsum("abc,ia,jb,kc->ijk", D, Bt, Bt, Bt))


def canonical_form_3_14(T: SymTensor3, cfg: OptimizerConfig | None = None) -> CanonicalForm314:
    """Frame ``(v_1, eigenvectors of T(v_1, ., .) on v_1-perp)`` with ``v_1`` the comass1 maximizer."""
    cfg = cfg or DEFAULT_CONFIG
    n = T.dim
    if not np.any(T.dense):
        return CanonicalForm314(np.eye(n), np.zeros(n), np.zeros((n - 1,) * 3))
    v1 = comass1(T, cfg).certificate
    B = _orth_complement(v1[:, None], n)
    A = B.T @ np.einsum("ijk,i->jk", T.dense, v1) @ B
    a, V = np.linalg.eigh(A)
    basis = np.column_stack([v1, B @ V])
    C = pullback_linear(T, basis).dense
    coeffs = np.concatenate([[C[0, 0, 0]], a])
    return CanonicalForm314(basis, coeffs, C[1:, 1:, 1:].copy())


def embed_2d_cross(a2: float) -> EmbeddingMap:
    """The linear map ``R^2 -> R^4`` with ``L v_1 = s (1,1,-1,-1)/2`` and

    ``L v_2 = (p, -p, q, -q)``, ``p = sqrt((1+2 a2)/2)``, ``q = sqrt((1-2 a2)/2)``,
    ``s = +1`` for ``a2 >= 0`` and ``-1`` otherwise. The pullbacks of
    ``g0`` and ``sum y_i^3`` are computed and stored in ``meta``; they are not
    assumed.
    """
    a2 = float(a2)
    if abs(a2) > 0.5:
        raise ValueError(f"|a2| must be <= 1/2, got {a2}")
    s = 1.0 if a2 >= 0 else -1.0
    p = math.sqrt((1 + 2 * a2) / 2)
    q = math.sqrt((1 - 2 * a2) / 2)
    L = np.column_stack([s * np.array([0.5, 0.5, -0.5, -0.5]), [p, -p, q, -q]])
    target = FlatTarget(standard_tensor(4))
    f = EmbeddingMap.linear(L, target, "2d-cross")
    G = L.T @ L
    P = pullback_linear(target.tensor, L)
    f.meta.update(
        {
            "a2": a2,
            "sign": s,
            "pullback_metric": G,
            "pullback_tensor": P,
            # the x1 x2^2 component and its ratio to a2
            "T122": P[1, 2, 2],
            "factor": P[1, 2, 2] / a2 if a2 != 0 else None,
            "off_form": max(abs(P[1, 1, 1]), abs(P[1, 1, 2]), abs(P[2, 2, 2])),
        }
    )
    return f


def null_embedding(m: int) -> EmbeddingMap:
    """``x_i -> (x_i/sqrt2, -x_i/sqrt2)`` in coordinates ``(2i-1, 2i)``: isometric, kills ``T_0``."""
    if m < 1:
        raise DimensionError("null embedding needs m >= 1")
    L = np.zeros((2 * m, m))
    r = 1.0 / math.sqrt(2.0)
    for i in range(m):
        L[2 * i, i] = r
        L[2 * i + 1, i] = -r
    return EmbeddingMap.linear(L, FlatTarget(standard_tensor(2 * m)), "null")


def _cube_directions(m: int) -> np.ndarray:
    eye = np.eye(m)
    rows = [eye[i] for i in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            rows += [eye[i] + eye[j], eye[i] - eye[j]]
    for i in range(m):
        for j in range(i + 1, m):
            for k in range(j + 1, m):
                rows.append(eye[i] + eye[j] + eye[k])
    return np.array(rows)


def cubic_sum_embedding(T: SymTensor3) -> EmbeddingMap:
    """Linear ``f_1: R^m -> R^K`` with ``f_1^* T_0 = T``, ``K = C(m+2, 3)``.

    Writes ``T(x,x,x) = sum_j c_j (l_j . x)^3`` over fixed directions ``l_j``
    whose cubes span the cubic forms, then uses rows ``cbrt(c_j) l_j``.
    """
    m = T.dim
    Lr = _cube_directions(m)
    basis = np.einsum("ri,rj,rk->rijk", Lr, Lr, Lr).reshape(len(Lr), -1)
    c, *_ = np.linalg.lstsq(basis.T, T.dense.ravel(), rcond=None)
    rows = np.cbrt(c)[:, None] * Lr
    f = EmbeddingMap.linear(rows, FlatTarget(standard_tensor(len(Lr))), "cubic-sum")
    err = pullback_linear(f.target.tensor, rows).max_abs_diff(T)
    if err > 1e-10 * max(1.0, full_norm(T)):
        raise ContractError(f"cubic-sum decomposition residual {err:.3e}")
    return f


def max_scale(g, G1) -> float:
    """Supremum of ``s`` with ``g - s^2 G1`` positive definite."""
    g = np.asarray(g, dtype=float)
    G1 = np.asarray(G1, dtype=float)
    top = float(eigh(G1, g, eigvals_only=True)[-1])
    return math.inf if top <= 0 else 1.0 / math.sqrt(top)


def scale_compose(f1: EmbeddingMap, f2: EmbeddingMap, s: float) -> EmbeddingMap:
    """``f_3 = s f_1 (+) null(f_2)`` into ``(R^{K + 2M}, g0, s^-3 T_0)``.

    If ``f_1^* T_0 = T`` and ``f_2`` is isometric for ``g - s^2 f_1^* g0``
    then ``f_3^* g0 = g`` and ``f_3^* (s^-3 T_0) = T``.
    """
    if not s > 0:
        raise ValueError("scale must be positive")
    if f1.source_dim != f2.source_dim:
        raise DimensionError("f1 and f2 must share the source dimension")
    null = null_embedding(f2.target.dim)
    K, M2 = f1.target.dim, null.target.dim
    N = K + M2
    target = FlatTarget(standard_tensor(N, s**-3))

    def ev(x):
        return np.concatenate([s * f1(x), null(f2(x))])

    def jac(x):
        return np.vstack([s * f1.jacobian(x), null.jacobian(f2(x)) @ f2.jacobian(x)])

    matrix = None
    if f1.matrix is not None and f2.matrix is not None:
        matrix = np.vstack([s * f1.matrix, null.matrix @ f2.matrix])
    return EmbeddingMap(f1.source_dim, target, ev, jac, "scale-compose", matrix, {"scale": s})


def embed_constant_structure(g, T: SymTensor3, s: float | None = None, margin: float = 0.5) -> EmbeddingMap:
    """Embed the constant structure ``(R^m, g, T)`` into a flat ``(R^N, g0, A T_0)``.

    ``f_1`` is :func:`cubic_sum_embedding`, ``s`` defaults to ``margin``
    times the largest admissible scale and ``f_2`` is the Cholesky isometry of
    the residual metric.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (T.dim, T.dim):
        raise DimensionError("metric and tensor dimensions differ")
    f1 = cubic_sum_embedding(T)
    G1 = f1.matrix.T @ f1.matrix
    smax = max_scale(g, G1)
    if s is None:
        s = margin * (smax if math.isfinite(smax) else 1.0)
    g1 = g - s * s * G1
    try:
        C = np.linalg.cholesky(g1)
    except np.linalg.LinAlgError:
        lam = float(np.linalg.eigvalsh(g1)[0])
        raise NotPositiveDefiniteError(f"g - s^2 f1*g0 is not positive definite for s = {s}", lam) from None
    f2 = EmbeddingMap.linear(C.T, FlatTarget(SymTensor3.zeros(T.dim)), "residual-isometry")
    return scale_compose(f1, f2, s)

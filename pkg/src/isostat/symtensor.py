"""Fully symmetric 3-tensors on R^n and positive-definite metrics.

A :class:`SymTensor3` is stored as a packed map from sorted 1-based index
triples ``(i, j, k)``, ``i <= j <= k``, to reals. The dense ``n x n x n``
symmetric array is materialized once at construction and kept read-only,
so every operation here is a pure function of immutable inputs.

Inner products and norms use the full-multiplicity convention: all ``n**3``
index combinations are summed. Under that convention the trace-type
projection constant is exactly ``1 / (n + 2)``.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import DimensionError, NotPositiveDefiniteError, TensorFormatError

__all__ = [
    "SymTensor3",
    "MetricMatrix",
    "TraceDecomposition",
    "evaluate",
    "trace_vector",
    "trace_type_tensor",
    "project_trace",
    "pullback_linear",
    "polarize",
    "diagonal",
    "full_norm",
    "inner",
    "standard_tensor",
    "cap_tensor",
    "symmetrize",
    "orthonormal_components",
]

_PERMS = tuple(itertools.permutations(range(3)))


def symmetrize(arr: np.ndarray) -> np.ndarray:
    """Average a 3-way array over the six axis permutations."""
    arr = np.asarray(arr, dtype=float)
    return sum(np.transpose(arr, p) for p in _PERMS) / 6.0


def _sorted_triples(n: int):
    return itertools.combinations_with_replacement(range(n), 3)


class SymTensor3:
    """Symmetric trilinear form ``T(x, y, z) = sum T_ijk x_i y_j z_k``.

    Parameters
    ----------
    dim:
        Ambient dimension ``n >= 1``.
    coeffs:
        Mapping from 1-based index triples to values. Triples are sorted on
        input; two keys that sort to the same triple are rejected.
    """

    __slots__ = ("_dim", "_dense", "_coeffs")

    def __init__(self, dim: int, coeffs: Mapping[tuple, float] | None = None):
        dim = int(dim)
        if dim < 1:
            raise DimensionError(f"tensor dimension must be >= 1, got {dim}")
        dense = np.zeros((dim, dim, dim))
        packed: dict[tuple[int, int, int], float] = {}
        for key, val in (coeffs or {}).items():
            idx = tuple(sorted(int(i) for i in key))
            if len(idx) != 3:
                raise TensorFormatError(f"index {key!r} is not a triple")
            if idx[0] < 1 or idx[2] > dim:
                raise TensorFormatError(f"index {key!r} out of range 1..{dim}")
            if idx in packed:
                raise TensorFormatError(f"duplicate entry for triple {idx}")
            val = float(val)
            if not math.isfinite(val):
                raise TensorFormatError(f"non-finite value at {idx}")
            packed[idx] = val
            i, j, k = (c - 1 for c in idx)
            for p in set(itertools.permutations((i, j, k))):
                dense[p] = val
        self._finish(dim, dense)

    def _finish(self, dim: int, dense: np.ndarray) -> None:
        dense = np.ascontiguousarray(dense, dtype=float)
        dense.setflags(write=False)
        self._dim = dim
        self._dense = dense
        self._coeffs = None

    @classmethod
    def from_dense(cls, arr, *, check: bool = False, atol: float = 1e-12) -> "SymTensor3":
        """Build from a dense array, symmetrizing it.

        With ``check=True`` a non-symmetric input raises instead of being
        silently averaged.
        """
        arr = np.asarray(arr, dtype=float)
        if arr.ndim != 3 or len(set(arr.shape)) != 1:
            raise DimensionError(f"expected an n x n x n array, got shape {arr.shape}")
        sym = symmetrize(arr)
        # copy the sorted-index value to every permutation so symmetry is exact
        n = arr.shape[0]
        canon = np.sort(np.indices((n, n, n)).reshape(3, -1), axis=0)
        sym = sym[tuple(canon)].reshape(n, n, n)
        if check:
            scale = max(1.0, float(np.max(np.abs(arr))))
            if np.max(np.abs(sym - arr)) > atol * scale:
                raise TensorFormatError("array is not symmetric")
        if arr.shape[0] < 1:
            raise DimensionError("tensor dimension must be >= 1")
        obj = cls.__new__(cls)
        obj._finish(arr.shape[0], sym)
        return obj

    @classmethod
    def zeros(cls, dim: int) -> "SymTensor3":
        return cls(dim)

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def dense(self) -> np.ndarray:
        """Read-only dense symmetric array of shape ``(n, n, n)``."""
        return self._dense

    @property
    def coeffs(self) -> dict[tuple[int, int, int], float]:
        """Nonzero packed entries keyed by sorted 1-based triples."""
        if self._coeffs is None:
            d = self._dense
            self._coeffs = {
                (i + 1, j + 1, k + 1): float(d[i, j, k])
                for i, j, k in _sorted_triples(self._dim)
                if d[i, j, k] != 0.0
            }
        return dict(self._coeffs)

    def __getitem__(self, idx) -> float:
        i, j, k = (int(c) - 1 for c in idx)
        return float(self._dense[i, j, k])

    def __call__(self, x, y, z) -> float:
        return evaluate(self, x, y, z)

    def cubic(self, x) -> float:
        """Diagonal value ``T(x, x, x)``."""
        return evaluate(self, x, x, x)

    def __add__(self, other: "SymTensor3") -> "SymTensor3":
        _same_dim(self, other)
        return SymTensor3.from_dense(self._dense + other._dense)

    def __sub__(self, other: "SymTensor3") -> "SymTensor3":
        _same_dim(self, other)
        return SymTensor3.from_dense(self._dense - other._dense)

    def __neg__(self) -> "SymTensor3":
        return SymTensor3.from_dense(-self._dense)

    def __mul__(self, scalar: float) -> "SymTensor3":
        return SymTensor3.from_dense(float(scalar) * self._dense)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "SymTensor3":
        return SymTensor3.from_dense(self._dense / float(scalar))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymTensor3):
            return NotImplemented
        return self._dim == other._dim and np.array_equal(self._dense, other._dense)

    def __hash__(self):
        return hash((self._dim, self._dense.tobytes()))

    def allclose(self, other: "SymTensor3", rtol: float = 1e-12, atol: float = 0.0) -> bool:
        _same_dim(self, other)
        return bool(np.allclose(self._dense, other._dense, rtol=rtol, atol=atol))

    def max_abs_diff(self, other: "SymTensor3") -> float:
        _same_dim(self, other)
        return float(np.max(np.abs(self._dense - other._dense)))

    def __repr__(self) -> str:
        items = ", ".join(f"{k}: {v:.6g}" for k, v in sorted(self.coeffs.items()))
        return f"SymTensor3(dim={self._dim}, {{{items}}})"

    # -- serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        entries = [
            {"idx": list(idx), "val": val} for idx, val in sorted(self.coeffs.items())
        ]
        return {"dim": self._dim, "entries": entries}

    @classmethod
    def from_json_dict(cls, data) -> "SymTensor3":
        if not isinstance(data, Mapping):
            raise TensorFormatError("tensor JSON must be an object")
        try:
            dim = data["dim"]
            entries = data.get("entries", [])
        except KeyError as exc:
            raise TensorFormatError(f"missing key {exc.args[0]!r}") from None
        if not isinstance(dim, int) or isinstance(dim, bool):
            raise TensorFormatError("'dim' must be an integer")
        if not isinstance(entries, list):
            raise TensorFormatError("'entries' must be a list")
        coeffs: dict[tuple, float] = {}
        for e in entries:
            if not isinstance(e, Mapping) or "idx" not in e or "val" not in e:
                raise TensorFormatError(f"malformed entry {e!r}")
            idx = e["idx"]
            if (
                not isinstance(idx, list)
                or len(idx) != 3
                or not all(isinstance(i, int) and not isinstance(i, bool) for i in idx)
            ):
                raise TensorFormatError(f"malformed index {idx!r}")
            key = tuple(sorted(idx))
            if key in coeffs:
                raise TensorFormatError(f"duplicate entry for triple {key}")
            val = e["val"]
            if not isinstance(val, (int, float)) or isinstance(val, bool):
                raise TensorFormatError(f"value at {key} is not a number")
            coeffs[key] = val
        return cls(dim, coeffs)

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "SymTensor3":
        return cls.from_json_dict(json.loads(text))


def _same_dim(a: SymTensor3, b: SymTensor3) -> None:
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")


def _vec(x, n: int, name: str = "vector") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DimensionError(f"{name} has shape {x.shape}, expected ({n},)")
    return x


def evaluate(T: SymTensor3, x, y, z) -> float:
    """Trilinear evaluation over all ``n**3`` index combinations."""
    n = T.dim
    x, y, z = _vec(x, n, "x"), _vec(y, n, "y"), _vec(z, n, "z")
    return float(np.einsum("ijk,i,j,k->", T.dense, x, y, z))


def diagonal(T: SymTensor3) -> Callable[[np.ndarray], float]:
    """Return the cubic form ``v -> T(v, v, v)``."""
    return T.cubic


def trace_vector(S: SymTensor3) -> np.ndarray:
    """Vector dual to the 1-form ``z -> sum_i S(e_i, e_i, z)``."""
    return np.einsum("iik->k", S.dense).copy()


def trace_type_tensor(v) -> SymTensor3:
    """``T^v(x,y,z) = <v,x><y,z> + <v,y><x,z> + <v,z><x,y>``."""
    v = np.asarray(v, dtype=float).ravel()
    n = v.size
    if n < 1:
        raise DimensionError("trace-type tensor needs a vector of length >= 1")
    eye = np.eye(n)
    arr = (
        np.einsum("i,jk->ijk", v, eye)
        + np.einsum("j,ik->ijk", v, eye)
        + np.einsum("k,ij->ijk", v, eye)
    )
    return SymTensor3.from_dense(arr)


@dataclass(frozen=True)
class TraceDecomposition:
    """Splitting ``T = primitive + trace_type_tensor(trace_vector)``.

    ``trace_vector`` holds the vector ``v`` of the trace part ``T^v``
    (so ``v = Tr(T) / (n + 2)``).
    """

    primitive: SymTensor3
    trace_vector: np.ndarray
    residual_norm: float

    @property
    def trace_part(self) -> SymTensor3:
        return trace_type_tensor(self.trace_vector)


def project_trace(S: SymTensor3) -> TraceDecomposition:
    """Orthogonal split of ``S`` into its primitive and trace-type parts."""
    n = S.dim
    v = trace_vector(S) / (n + 2)
    trace_part = trace_type_tensor(v)
    primitive = SymTensor3.from_dense(S.dense - trace_part.dense)
    residual = float(np.linalg.norm(trace_vector(primitive)))
    return TraceDecomposition(primitive=primitive, trace_vector=v, residual_norm=residual)


def pullback_linear(T: SymTensor3, L) -> SymTensor3:
    """Restriction ``(L*T)(x,y,z) = T(Lx, Ly, Lz)`` for an ``N x n`` matrix ``L``.

    A rank-deficient ``L`` only triggers a warning; the pulled-back tensor is
    still well defined.
    """
    L = np.asarray(L, dtype=float)
    if L.ndim == 1:
        L = L[:, None]
    if L.ndim != 2 or L.shape[0] != T.dim:
        raise DimensionError(f"matrix of shape {L.shape} cannot act on R^{T.dim}")
    n = L.shape[1]
    if n < 1:
        raise DimensionError("pullback needs at least one column")
    if n <= L.shape[0] and np.linalg.matrix_rank(L) < n:
        warnings.warn("pullback_linear: matrix is rank deficient", RuntimeWarning, stacklevel=2)
    arr = np.einsum("abc,ai,bj,ck->ijk", T.dense, L, L, L, optimize=True)
    return SymTensor3.from_dense(arr)


def polarize(f: Callable[[np.ndarray], float], n: int) -> SymTensor3:
    """Recover the symmetric tensor whose cubic form is ``f``.

    Uses ``24 T(x,y,z) = f(x+y+z) - f(x+y-z) - f(x-y+z) - f(-x+y+z)``,
    which holds for any odd cubic form.
    """
    n = int(n)
    if n < 1:
        raise DimensionError("dimension must be >= 1")
    eye = np.eye(n)
    coeffs = {}
    for i, j, k in _sorted_triples(n):
        x, y, z = eye[i], eye[j], eye[k]
        val = (f(x + y + z) - f(x + y - z) - f(x - y + z) - f(-x + y + z)) / 24.0
        if val != 0.0:
            coeffs[(i + 1, j + 1, k + 1)] = val
    return SymTensor3(n, coeffs)


def inner(S: SymTensor3, T: SymTensor3) -> float:
    """Full-multiplicity inner product ``sum_ijk S_ijk T_ijk``."""
    _same_dim(S, T)
    return float(np.sum(S.dense * T.dense))


def full_norm(T: SymTensor3) -> float:
    return float(np.sqrt(np.sum(T.dense**2)))


def standard_tensor(n: int, scale: float = 1.0) -> SymTensor3:
    """``scale * sum_i dx_i^3``."""
    return SymTensor3(n, {(i, i, i): scale for i in range(1, n + 1)} if scale else {})


def cap_tensor(x) -> SymTensor3:
    """Diagonal tensor with ``T_iii = 2 / x_i`` at a point of the open orthant."""
    x = np.asarray(x, dtype=float).ravel()
    if np.any(x <= 0):
        raise DimensionError("cap tensor needs a point with positive coordinates")
    return SymTensor3(x.size, {(i + 1, i + 1, i + 1): 2.0 / xi for i, xi in enumerate(x)})


class MetricMatrix:
    """Symmetric positive-definite bilinear form; SPD is checked on construction."""

    __slots__ = ("_entries",)

    def __init__(self, entries, *, sym_tol: float = 1e-10):
        arr = np.array(entries, dtype=float, ndmin=2)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise DimensionError(f"metric must be a square matrix, got shape {arr.shape}")
        scale = max(1.0, float(np.max(np.abs(arr))))
        if np.max(np.abs(arr - arr.T)) > sym_tol * scale:
            raise NotPositiveDefiniteError("metric matrix is not symmetric")
        arr = 0.5 * (arr + arr.T)
        lam = float(np.linalg.eigvalsh(arr)[0])
        if not lam > 0:
            raise NotPositiveDefiniteError(
                f"metric is not positive definite (smallest eigenvalue {lam:.3e})", lam
            )
        arr.setflags(write=False)
        self._entries = arr

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    def __call__(self, x, y) -> float:
        return float(np.asarray(x) @ self._entries @ np.asarray(y))

    def orthonormal_frame(self) -> np.ndarray:
        """Columns ``E`` with ``E.T @ g @ E = I`` (inverse transposed Cholesky factor)."""
        C = np.linalg.cholesky(self._entries)
        return np.linalg.inv(C).T

    def __repr__(self) -> str:
        return f"MetricMatrix({self._entries.tolist()})"


def orthonormal_components(metric: MetricMatrix, T: SymTensor3) -> SymTensor3:
    """Express ``T`` in a ``metric``-orthonormal frame."""
    return pullback_linear(T, metric.orthonormal_frame())


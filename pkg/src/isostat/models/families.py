"""Built-in families: the simplex Cap^N (two charts), weak potentials and the Gaussian."""

from __future__ import annotations

import ast
import math
import operator
from typing import Callable, Sequence

import numpy as np

from ..errors import DimensionError, TensorFormatError
from .core import EPS_BOUND, FiniteSpace, ParametricModel, QuadratureSpace


def _cap_probs(theta: np.ndarray) -> np.ndarray:
    return np.append(theta, 1.0 - np.sum(theta))


def cap_model(N: int, analytic: bool = True) -> ParametricModel:
    """Positive distributions on ``N`` atoms with coordinates ``(p_1, ..., p_{N-1})``.

    Every ``p_i`` (including ``p_N = 1 - sum``) must be at least ``EPS_BOUND``.
    """
    if N < 2:
        raise DimensionError(f"Cap^N needs N >= 2, got {N}")

    def density(theta, omega):
        return _cap_probs(theta)[np.asarray(omega, dtype=int)]

    def domain(theta):
        return bool(np.all(_cap_probs(theta) >= EPS_BOUND))

    def score(theta, omega):
        idx = np.asarray(omega, dtype=int)
        p = _cap_probs(theta)
        S = np.zeros((N - 1, N))
        S[np.arange(N - 1), np.arange(N - 1)] = 1.0 / p[:-1]
        S[:, N - 1] = -1.0 / p[-1]
        return S[:, idx]

    return ParametricModel(N - 1, FiniteSpace(N), density, domain, "probability", score if analytic else None, f"cap:{N}")


def cap_point(p) -> np.ndarray:
    """Parameter vector of ``cap_model`` for the full probability vector ``p``."""
    p = np.asarray(p, dtype=float).ravel()
    return p[:-1].copy()


def _sphere_last(q: np.ndarray) -> float:
    r2 = 4.0 - float(np.dot(q, q))
    return math.sqrt(r2) if r2 > 0 else 0.0


def cap_sphere_model(N: int, analytic: bool = True) -> ParametricModel:
    """Cap^N in the chart ``q_i = 2 sqrt(p_i)``, ``i < N``, on the sphere of radius 2."""
    if N < 2:
        raise DimensionError(f"Cap^N needs N >= 2, got {N}")

    def probs(q):
        return np.append(q * q, _sphere_last(q) ** 2) / 4.0

    def density(q, omega):
        return probs(q)[np.asarray(omega, dtype=int)]

    def domain(q):
        return bool(np.all(q > 0) and np.dot(q, q) < 4.0 and np.all(probs(q) >= EPS_BOUND))

    def score(q, omega):
        qN = _sphere_last(q)
        S = np.zeros((N - 1, N))
        S[np.arange(N - 1), np.arange(N - 1)] = 2.0 / q
        S[:, N - 1] = -2.0 * q / qN**2
        return S[:, np.asarray(omega, dtype=int)]

    return ParametricModel(N - 1, FiniteSpace(N), density, domain, "probability", score if analytic else None, f"cap-sphere:{N}")


def sphere_point(p) -> np.ndarray:
    """q-chart coordinates ``2 sqrt(p_i)``, ``i < N``, of a probability vector."""
    p = np.asarray(p, dtype=float).ravel()
    return 2.0 * np.sqrt(p[:-1])


def round_sphere_metric(q) -> np.ndarray:
    """Metric of the radius-2 sphere in graph coordinates over the first ``N-1`` axes."""
    q = np.asarray(q, dtype=float).ravel()
    qN = _sphere_last(q)
    return np.eye(q.size) + np.outer(q, q) / qN**2


def weak_potential_model(
    atoms: Sequence[Callable[[np.ndarray], float]], param_dim: int, name: str = "weak", score=None
) -> ParametricModel:
    """Weak potential on the positive orthant given one function per atom.

    ``score(theta, omega)`` optionally supplies exact log-derivatives.
    """
    atoms = list(atoms)

    def density(theta, omega):
        vals = np.array([f(theta) for f in atoms], dtype=float)
        return vals[np.asarray(omega, dtype=int)]

    def domain(theta):
        return bool(np.all(theta > 0))

    return ParametricModel(param_dim, FiniteSpace(len(atoms)), density, domain, "weak", score, name)


def quadrant_model(N: int, analytic: bool = True) -> ParametricModel:
    """``p_i(x) = x_i^2 / 4`` on the orthant; its weak Fisher metric is Euclidean."""
    atoms = [lambda x, i=i: 0.25 * x[i] ** 2 for i in range(N)]

    def score(x, omega):
        idx = np.asarray(omega, dtype=int)
        S = np.zeros((N, N))
        S[np.arange(N), np.arange(N)] = 2.0 / x
        return S[:, idx]

    return weak_potential_model(atoms, N, name=f"quadrant:{N}", score=score if analytic else None)


def gaussian_model(n_nodes: int = 200, half_width: float = 12.0) -> ParametricModel:
    """Normal densities with ``theta = (mu, sigma)``, integrated over ``mu +- 12 sigma``."""

    def density(theta, x):
        mu, sigma = theta
        u = (x - mu) / sigma
        return np.exp(-0.5 * u * u) / (math.sqrt(2 * math.pi) * sigma)

    def domain(theta):
        return bool(theta[1] > 0)

    space = QuadratureSpace(lambda th: (float(th[0]), float(th[1])), n_nodes, half_width)
    return ParametricModel(2, space, density, domain, "probability", None, "gaussian")


# -- polynomial expressions for weak potentials -------------------------------

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def parse_expression(text: str, param_dim: int) -> Callable[[np.ndarray], float]:
    """Compile an arithmetic expression in ``x1 .. xm`` (``+ - * / **`` and numbers)."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise TensorFormatError(f"cannot parse expression {text!r}: {exc.msg}") from None

    def check(node):
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            check(node.operand)
        elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            pass
        elif isinstance(node, ast.Name):
            name = node.id
            if not (name.startswith("x") and name[1:].isdigit() and 1 <= int(name[1:]) <= param_dim):
                raise TensorFormatError(f"unknown variable {name!r} in {text!r}")
        else:
            raise TensorFormatError(f"unsupported syntax in {text!r}")

    check(tree)

    def ev(node, x):
        if isinstance(node, ast.Expression):
            return ev(node.body, x)
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](ev(node.left, x), ev(node.right, x))
        if isinstance(node, ast.UnaryOp):
            return _UNOPS[type(node.op)](ev(node.operand, x))
        if isinstance(node, ast.Constant):
            return float(node.value)
        return float(x[int(node.id[1:]) - 1])

    return lambda x: ev(tree, x)


def model_from_spec(spec: dict) -> ParametricModel:
    """Build a model from its JSON description.

    Kinds: ``cap`` (``N``), ``cap-sphere`` (``N``), ``gaussian`` (optional
    ``nodes``), ``weak`` (``param_dim`` and per-atom ``atoms`` expressions).
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise TensorFormatError("model spec must be an object with a 'kind' field")
    kind = spec["kind"]
    try:
        if kind == "cap":
            return cap_model(int(spec["N"]))
        if kind == "cap-sphere":
            return cap_sphere_model(int(spec["N"]))
        if kind == "gaussian":
            return gaussian_model(int(spec.get("nodes", 200)))
        if kind == "weak":
            m = int(spec["param_dim"])
            atoms = [parse_expression(str(e), m) for e in spec["atoms"]]
            if not atoms:
                raise TensorFormatError("weak model needs at least one atom")
            return weak_potential_model(atoms, m)
    except KeyError as exc:
        raise TensorFormatError(f"model spec of kind {kind!r} lacks field {exc}") from None
    if kind == "finite-table":
        raise TensorFormatError(
            "finite-table models cannot be differentiated from tabulated values; "
            "supply densities as expressions (kind 'weak') or through the library API"
        )
    raise TensorFormatError(f"unknown model kind {kind!r}")

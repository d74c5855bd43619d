"""Curves of constant cubic value in small spheres of the Cap orthant and their products.

The ambient space is ``(R^4_+, g0, sum 2/x_i dx_i^3)``; its sphere of radius 2
is Cap^4 in the chart ``x_i = 2 sqrt(p_i)``. A product of ``n`` spheres of
radius ``2/sqrt(n)`` lies on the sphere of radius 2 in ``R^{4n}_+``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError, DimensionError
from ..invariants.optimize import circle_critical_points
from ..symtensor import SymTensor3, cap_tensor
from .maps import CapTarget, EmbeddingMap
from .linear import _orth_complement


@dataclass(frozen=True)
class CapEmbeddingParams:
    """Base point ``x0 = (lambda0, b, b, b)`` on ``S^3(2/sqrt(n))`` with ``b = 1/(2 A_bar)``.

    ``step`` defaults to ``min(1e-3, r/100)`` for the torus major radius ``r``.
    """

    n: int
    A: float
    step: float | None = None
    R: float = 1.0
    A_bar: float = field(init=False)
    lambda0: float = field(init=False)
    base_point: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise DimensionError("box dimension n must be >= 1")
        if not self.A >= 0:
            raise ValueError("A must be >= 0")
        if not self.R > 0:
            raise ValueError("R must be > 0")
        rn = math.sqrt(self.n)
        A_bar = max(4 * rn, 4 * rn * self.A)
        lam = math.sqrt((4.0 - 3 * self.n * (2 * A_bar) ** -2) / self.n)
        b = 1.0 / (2 * A_bar)
        x0 = np.array([lam, b, b, b])
        x0.setflags(write=False)
        object.__setattr__(self, "A_bar", A_bar)
        object.__setattr__(self, "lambda0", lam)
        object.__setattr__(self, "base_point", x0)

    @property
    def radius(self) -> float:
        return 2.0 / math.sqrt(self.n)

    def tensor_at_base(self) -> SymTensor3:
        return cap_tensor(self.base_point)


def _cubic_diag(coef, w) -> float:
    return float(np.dot(coef, np.asarray(w) ** 3))


# -- Sublemma: a large cubic value in every tangent 2-plane at x0 -------------


@dataclass(frozen=True)
class SublemmaResult:
    """``w`` and ``value = T_{x0}(w,w,w)``; ``path`` is ``"formula"`` or ``"circle"``."""

    w: np.ndarray
    value: float
    case: int
    path: str
    constraint_residual: float
    formula_value: float | None = None


def _reduce_constraint(h, x0):
    h = np.asarray(h, dtype=float).ravel()
    if h.size != 4:
        raise DimensionError("constraint vector h must have 4 entries")
    hr = h - (h[0] / x0[0]) * x0
    nr = np.linalg.norm(hr)
    if nr <= 1e-12 * max(1.0, np.linalg.norm(h)):
        raise ValueError("h is collinear with the base point")
    return hr / nr


def _case_split(hr):
    """Sign flip and permutation of coordinates 2..4 bringing ``hr`` to a normal form."""
    t = hr[1:].copy()
    if np.all(t <= 0):
        t = -t
    if np.all(t > 0):
        order = np.argsort(-t, kind="stable")
        return 2, order, t[order]
    neg = [i for i in range(3) if t[i] <= 0]
    pos = [i for i in range(3) if t[i] > 0]
    order = np.array([neg[0], pos[0]] + [i for i in range(3) if i not in (neg[0], pos[0])])
    return 1, order, t[order]


def _formula_vector(case, t, p: CapEmbeddingParams, printed: bool = False):
    """The case formulas in permuted coordinates (entries 2..4 reordered by the case split)."""
    lam2A = p.lambda0 * 2 * p.A_bar
    if case == 1:
        k2 = -t[0] / math.hypot(t[0], t[1])
        k3 = t[1] / math.hypot(t[0], t[1])
        c = (k2 + k3) / lam2A
        if printed:
            eps = 1 + c * c - math.sqrt(1 + c * c)
            return np.array([(1 - eps) * c, (1 - eps) * k3, (1 - eps) * k2, 0.0])
        s = 1.0 / math.sqrt(1 + c * c)
        return np.array([-c * s, k3 * s, k2 * s, 0.0])
    # alpha = (t2 + t3) / t4, written so that a tiny t4 cannot overflow
    r = math.hypot(t[0] + t[1], math.sqrt(2.0) * t[2])
    a = t[2] / r
    alpha_a = (t[0] + t[1]) / r
    B = (alpha_a - 2 * a) / lam2A
    if printed:
        eps = (1 + 2 * B * B) - math.sqrt((1 + 2 * B * B) ** 2 - B * B * (1 + B * B))
        one = 1 - eps
        return np.array([one * B, -a * one, -a * one, alpha_a * one])
    one = 1.0 / math.sqrt(1 + B * B)
    return np.array([-B * one, -a * one, -a * one, alpha_a * one])


def _unpermute(v, order):
    out = np.empty(4)
    out[0] = v[0]
    out[1 + order] = v[1:]
    return out


def constraint_plane(h, params: CapEmbeddingParams) -> np.ndarray:
    """Orthonormal 4x2 basis of ``{w : w . x0 = 0, w . h = 0}``."""
    x0 = params.base_point
    hr = _reduce_constraint(h, x0)
    return _orth_complement(np.column_stack([x0 / np.linalg.norm(x0), hr]), 4)


def _project(w, x0, hr):
    Q, _ = np.linalg.qr(np.column_stack([x0, hr]))
    w = w - Q @ (Q.T @ w)
    w = w - Q @ (Q.T @ w)
    return w / np.linalg.norm(w)


def sublemma_formula_candidate(h, params: CapEmbeddingParams, printed: bool = False):
    """Raw case-formula vector before projection, and its case number.

    With ``printed=True`` the formulas are taken with the signs and roots as
    typeset, which generally violate ``w . x0 = 0`` and ``|w| = 1``.
    """
    x0 = params.base_point
    hr = _reduce_constraint(h, x0)
    case, order, t = _case_split(hr)
    return _unpermute(_formula_vector(case, t, params, printed), order), case


def circle_search(h, params: CapEmbeddingParams) -> tuple[float, np.ndarray]:
    """Maximum of ``T_{x0}(w,w,w)`` over unit ``w`` in the constraint plane."""
    P = constraint_plane(h, params)
    coef = 2.0 / params.base_point
    D = np.einsum("a,ai,aj,ak->ijk", coef, P, P, P)
    val, y = circle_critical_points(D)[0]
    return float(val), P @ y


def sublemma_direction(h, params: CapEmbeddingParams, tol: float = 1e-12) -> SublemmaResult:
    """Unit ``w`` orthogonal to ``x0`` and ``h`` with ``T_{x0}(w,w,w) >= 2A``.

    The case formula is evaluated, projected onto the constraint set and
    checked against the exact tensor; if the check fails the constraint
    circle is searched instead.
    """
    x0 = params.base_point
    coef = 2.0 / x0
    hr = _reduce_constraint(h, x0)
    case, order, t = _case_split(hr)
    w = _project(_unpermute(_formula_vector(case, t, params), order), x0, hr)
    val = _cubic_diag(coef, w)
    target = 2 * params.A
    fval = val
    path = "formula"
    if not val >= target:
        val, w = circle_search(h, params)
        w = _project(w, x0, hr)
        val = _cubic_diag(coef, w)
        path = "circle"
        if val < target:
            raise ContractError(f"no direction with T(w,w,w) >= {target:.6g}; best found {val:.12g}")
    res = max(abs(np.linalg.norm(w) - 1), abs(w @ x0), abs(w @ hr))
    if res > tol * max(1.0, np.linalg.norm(x0)):
        raise ContractError(f"sublemma constraints violated by {res:.3e}")
    return SublemmaResult(w, val, case, path, float(res), fval)


# -- a torus near x0 and the direction field on it ----------------------------


@dataclass(frozen=True)
class SmallTorus:
    """``X(phi, psi) = r0 (u0 + P) / |u0 + P|`` with ``P`` a torus of radii ``(rho_a, rho_c)`` in ``x0``-perp."""

    base: np.ndarray
    frame: np.ndarray
    rho_a: float
    rho_c: float

    @property
    def r0(self) -> float:
        return float(np.linalg.norm(self.base))

    @property
    def major_radius(self) -> float:
        """Major radius in ambient units."""
        return self.rho_a * self.r0

    def point_and_tangents(self, phi: float, psi: float):
        b1, b2, b3 = self.frame.T
        u0 = self.base / self.r0
        cf, sf, cp, sp = math.cos(phi), math.sin(phi), math.cos(psi), math.sin(psi)
        rad = self.rho_a + self.rho_c * cp
        ring = cf * b1 + sf * b2
        Y = u0 + rad * ring + self.rho_c * sp * b3
        Yphi = rad * (-sf * b1 + cf * b2)
        Ypsi = -self.rho_c * sp * ring + self.rho_c * cp * b3
        ny = np.linalg.norm(Y)
        yh = Y / ny
        scale = self.r0 / ny
        Xphi = scale * (Yphi - yh * (yh @ Yphi))
        Xpsi = scale * (Ypsi - yh * (yh @ Ypsi))
        return self.r0 * yh, Xphi, Xpsi


def _tangent_frame(Xphi, Xpsi):
    e1 = Xphi / np.linalg.norm(Xphi)
    e2 = Xpsi - e1 * (e1 @ Xpsi)
    e2 = e2 / np.linalg.norm(e2)
    return e1, e2


def _binary_coeffs(coef, e1, e2):
    t1, t2 = e1 * coef, e2 * coef
    return (
        float(t1 @ (e1 * e1)),
        float(t1 @ (e1 * e2)),
        float(t1 @ (e2 * e2)),
        float(t2 @ (e2 * e2)),
    )


def _trig(a, b, c, d):
    return 0.75 * (a + c), 0.75 * (b + d), 0.25 * (a - 3 * c), 0.25 * (3 * b - d)


def _f(th, A1, B1, A3, B3):
    return A1 * np.cos(th) + B1 * np.sin(th) + A3 * np.cos(3 * th) + B3 * np.sin(3 * th)


def _df(th, A1, B1, A3, B3):
    return -A1 * np.sin(th) + B1 * np.cos(th) - 3 * A3 * np.sin(3 * th) + 3 * B3 * np.cos(3 * th)


def _trig_roots(A1, B1, A3, B3, level: float) -> np.ndarray:
    """Solutions of ``A1 cos t + B1 sin t + A3 cos 3t + B3 sin 3t = level``.

    With ``z = e^{it}`` this is a degree-6 polynomial; unit-modulus roots are
    polished by Newton steps. A sign-change scan is the fallback.
    """
    poly = np.array(
        [(A3 - 1j * B3) / 2, 0, (A1 - 1j * B1) / 2, -level, (A1 + 1j * B1) / 2, 0, (A3 + 1j * B3) / 2]
    )
    scale = max(abs(A1), abs(B1), abs(A3), abs(B3), abs(level), 1e-300)
    out = []
    if np.max(np.abs(poly[[0, 2, 4, 6]])) > 1e-14 * scale:
        z = np.roots(poly / scale)
        out = [float(np.angle(r)) for r in z if abs(abs(r) - 1) < 1e-3]
    if not out:
        grid = np.linspace(-math.pi, math.pi, 721)
        v = _f(grid, A1, B1, A3, B3) - level
        out = [float(grid[i]) for i in np.nonzero(np.sign(v[:-1]) != np.sign(v[1:]))[0]]
    roots = []
    for th in out:
        for _ in range(6):
            d = _df(th, A1, B1, A3, B3)
            if d == 0:
                break
            step = (_f(th, A1, B1, A3, B3) - level) / d
            th -= step
            if abs(step) < 1e-15:
                break
        if abs(_f(th, A1, B1, A3, B3) - level) <= 1e-9 * scale:
            roots.append(th)
    return np.array(roots)


def level_angles(abcd, level: float) -> np.ndarray:
    """Angles ``theta`` with ``p(cos theta, sin theta) = level`` for the binary cubic ``abcd``."""
    return _trig_roots(*_trig(*abcd), level)


def _circle_max(abcd) -> float:
    a, b, c, d = abcd
    D = np.zeros((2, 2, 2))
    D[0, 0, 0] = a
    D[0, 0, 1] = D[0, 1, 0] = D[1, 0, 0] = b
    D[0, 1, 1] = D[1, 0, 1] = D[1, 1, 0] = c
    D[1, 1, 1] = d
    return circle_critical_points(D)[0][0]


def build_torus(params: CapEmbeddingParams, retries: int = 10, grid: int = 48) -> tuple[SmallTorus, float]:
    """Torus near ``x0`` on which every tangent circle reaches ``1.5 A``.

    Starts at major radius ``b/10`` (``b = 1/(2 A_bar)``), minor radius half
    of it, and halves both on failure. Returns the torus and the smallest
    circle maximum seen on the check grid.
    """
    x0 = params.base_point
    r0 = float(np.linalg.norm(x0))
    frame = _orth_complement(x0[:, None] / r0, 4)
    rho_a = (1.0 / (2 * params.A_bar)) / 10 / r0
    angles = np.linspace(0, 2 * math.pi, grid, endpoint=False)
    worst = -math.inf
    for _ in range(retries + 1):
        tor = SmallTorus(x0, frame, rho_a, rho_a / 2)
        worst = math.inf
        for ph in angles:
            for ps in angles:
                X, Xp, Xq = tor.point_and_tangents(ph, ps)
                worst = min(worst, _circle_max(_binary_coeffs(2.0 / X, *_tangent_frame(Xp, Xq))))
        if worst >= 1.5 * params.A:
            return tor, worst
        rho_a /= 2
    raise ContractError(f"tangent-circle maximum {worst:.6g} < 1.5 A after {retries} radius halvings")


class DirectionField:
    """Unit tangent field ``V`` on the torus with ``T(V,V,V) = A``, chosen nearest to a reference."""

    def __init__(self, torus: SmallTorus, A: float):
        self.torus = torus
        self.A = float(A)

    def at(self, phi, psi, ref=None):
        """``(V, dphi, dpsi)`` with ``V = X_phi dphi + X_psi dpsi``."""
        X, Xp, Xq = self.torus.point_and_tangents(phi, psi)
        e1, e2 = _tangent_frame(Xp, Xq)
        abcd = _binary_coeffs(2.0 / X, e1, e2)
        th = level_angles(abcd, self.A)
        if th.size == 0:
            raise ContractError(f"no tangent direction with T(v,v,v) = {self.A} at phi={phi}, psi={psi}")
        cands = np.cos(th)[:, None] * e1 + np.sin(th)[:, None] * e2
        if ref is None:
            A1, B1, A3, B3 = _trig(*abcd)
            k = int(np.argmax(np.abs(_df(th, A1, B1, A3, B3))))
        else:
            k = int(np.argmax(cands @ ref))
        V = cands[k]
        J = np.column_stack([Xp, Xq])
        dphi, dpsi = np.linalg.solve(J.T @ J, J.T @ V)
        return V, dphi, dpsi


def _rk4(field: DirectionField, phi, psi, ref, h):
    V1, a1, b1 = field.at(phi, psi, ref)
    V2, a2, b2 = field.at(phi + h / 2 * a1, psi + h / 2 * b1, V1)
    V3, a3, b3 = field.at(phi + h / 2 * a2, psi + h / 2 * b2, V1)
    V4, a4, b4 = field.at(phi + h * a3, psi + h * b3, V1)
    return phi + h / 6 * (a1 + 2 * a2 + 2 * a3 + a4), psi + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4)


@dataclass
class CapCurve:
    """Arc-length curve sampled at nodes ``t`` with points, unit tangents and contract errors."""

    params: CapEmbeddingParams
    torus: SmallTorus
    t: np.ndarray
    angles: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    speed_error: np.ndarray
    tensor_error: np.ndarray
    map: EmbeddingMap = None
    max_turn: float = 0.0
    branch_switches: int = 0

    def rows(self):
        for i in range(self.t.size):
            yield [self.t[i], *self.points[i], self.speed_error[i], self.tensor_error[i]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x1", "x2", "x3", "x4", "speed_error", "tensor_error"])
        for r in self.rows():
            w.writerow([repr(float(v)) for v in r])
        return buf.getvalue()


def curve_into_cap4(params: CapEmbeddingParams, torus: SmallTorus | None = None) -> CapCurve:
    """Unit-speed curve ``gamma: [0, R] -> S^3(2/sqrt(n))`` with ``T(gamma', gamma', gamma') = A``.

    The curve is an integral curve of the direction field on a small torus
    near ``x0``, integrated by RK4 in the torus angles at step
    ``min(1e-3, r/100)``. Between nodes the map takes a partial RK4 step
    from the nearest node, and its derivative is the field value there.

    Where the followed solution of ``T(v,v,v) = A`` merges with another one
    and disappears, the nearest remaining solution is taken; such points
    are counted in ``branch_switches`` and make the curve only piecewise
    smooth there.
    """
    if torus is None:
        torus, _ = build_torus(params)
    field_ = DirectionField(torus, params.A)
    h = params.step or min(1e-3, torus.major_radius / 100)
    steps = max(1, int(math.ceil(params.R / h)))
    h = params.R / steps
    ang = np.empty((steps + 1, 2))
    tang = np.empty((steps + 1, 4))
    pts = np.empty((steps + 1, 4))
    phi, psi = 0.0, 0.0
    ref = None
    turns = np.zeros(steps + 1)
    for k in range(steps + 1):
        V, _, _ = field_.at(phi, psi, ref)
        if ref is not None:
            turns[k] = float(np.arccos(np.clip(V @ ref, -1, 1)))
        ang[k] = phi, psi
        tang[k] = V
        pts[k] = torus.point_and_tangents(phi, psi)[0]
        if k < steps:
            phi, psi = _rk4(field_, phi, psi, V, h)
        ref = V
    coef = 2.0 / pts
    speed = np.abs(np.linalg.norm(tang, axis=1) - 1)
    tens = np.abs(np.sum(coef * tang**3, axis=1) - params.A)
    ts = np.linspace(0.0, params.R, steps + 1)
    # a turn far above the typical one marks a point where the followed root merged with another
    switches = int(np.count_nonzero(turns > max(0.2, 10 * float(np.median(turns)))))

    def locate(t):
        t = float(np.ravel(t)[0])
        if t < -1e-12 or t > params.R + 1e-12:
            raise ValueError(f"curve parameter {t} outside [0, {params.R}]")
        k = min(steps, max(0, int(round(t / h))))
        dt = t - ts[k]
        ph, ps = ang[k]
        if dt != 0.0:
            ph, ps = _rk4(field_, ph, ps, tang[k], dt)
        return ph, ps, tang[k]

    def ev(t):
        ph, ps, _ = locate(t)
        return torus.point_and_tangents(ph, ps)[0]

    def jac(t):
        ph, ps, ref_ = locate(t)
        return field_.at(ph, ps, ref_)[0][:, None]

    emap = EmbeddingMap(1, CapTarget(4, params.radius), ev, jac, "cap-curve", meta={"step": h, "A": params.A, "branch_switches": switches})
    return CapCurve(params, torus, ts, ang, pts, tang, speed, tens, emap, float(turns.max()), switches)


def product_into_cap(params: CapEmbeddingParams, curve: CapCurve | None = None) -> EmbeddingMap:
    """``[0, R]^n -> (S^3(2/sqrt(n)))^n``, one curve per coordinate, inside ``R^{4n}_+``.

    All factors use the same curve, so the image lies on the sphere of radius 2.
    """
    n = params.n
    c = curve if curve is not None else curve_into_cap4(params)
    f = c.map

    def ev(theta):
        return np.concatenate([f(np.array([s])) for s in theta])

    def jac(theta):
        J = np.zeros((4 * n, n))
        for i, s in enumerate(theta):
            J[4 * i : 4 * i + 4, i] = f.jacobian(np.array([s]))[:, 0]
        return J

    return EmbeddingMap(n, CapTarget(4 * n, 2.0), ev, jac, "cap-product", meta={"A": params.A, "curve": c})

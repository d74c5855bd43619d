"""Explicit isostatistical maps: linear building blocks, the tangent-plane lemma, Cap curves."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import random_tensor
from isostat.embeddings import (
    CapEmbeddingParams,
    DirectionField,
    EmbeddingMap,
    FlatTarget,
    build_torus,
    canonical_form_2d,
    canonical_form_3_14,
    circle_search,
    constraint_plane,
    cubic_sum_embedding,
    curve_into_cap4,
    embed_2d_cross,
    embed_constant_structure,
    embed_line,
    embed_trace_type,
    level_angles,
    max_scale,
    null_embedding,
    product_into_cap,
    sample_box,
    scale_compose,
    sublemma_direction,
    sublemma_formula_candidate,
    verify_pullback,
)
from isostat.errors import ContractError, DimensionError, NotPositiveDefiniteError, ObstructedError, TensorFormatError
from isostat.invariants import comass1
from isostat.symtensor import SymTensor3, full_norm, pullback_linear, standard_tensor, trace_type_tensor

vec = st.lists(st.floats(-3, 3, allow_nan=False), min_size=1, max_size=5)


def _rotation(a):
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


def _linear_pullback_ok(f, g, T, tol):
    rep = verify_pullback(f, g, T, sample_box(f.source_dim, 50, seed=1))
    assert rep.max_metric_error <= tol
    assert rep.max_tensor_error <= tol
    assert not rep.rank_deficient


# -- trace type -----------------------------------------------------------------


def test_trace_type_identity():
    v = np.array([1.0, -2.0, 0.5])
    f = embed_trace_type(v, v)
    Lv = f.matrix.T @ v
    np.testing.assert_allclose(Lv, v, atol=1e-12)
    np.testing.assert_allclose(f.matrix.T @ f.matrix, np.eye(3), atol=1e-12)


def test_trace_type_line_example():
    f = embed_trace_type([1.0], [1.0, 1.0])
    u = f.matrix[:, 0]
    assert np.linalg.norm(u) == pytest.approx(1.0, abs=1e-12)
    assert u @ np.array([1.0, 1.0]) == pytest.approx(1.0, abs=1e-12)
    got = pullback_linear(trace_type_tensor([1.0, 1.0]), f.matrix)
    assert got.max_abs_diff(trace_type_tensor([1.0])) <= 1e-12


def test_trace_type_obstructions():
    with pytest.raises(ObstructedError) as e:
        embed_trace_type([2.0, 0.0], [1.0, 0.0, 0.0])
    assert e.value.condition == "trace_norm"
    with pytest.raises(ObstructedError) as e:
        embed_trace_type([0.1, 0.0, 0.0], [1.0, 0.0])
    assert e.value.condition == "dimension"
    with pytest.raises(ObstructedError) as e:
        embed_trace_type([0.5, 0.0], [1.0, 0.0])
    assert e.value.condition == "trace_norm_equal_dim"


@given(vec, vec, st.floats(0.0, 1.0))
@settings(max_examples=80, deadline=None)
def test_trace_type_iff(w, v, frac):
    w, v = np.array(w), np.array(v)
    k, N = w.size, v.size
    nv = np.linalg.norm(v)
    if np.linalg.norm(w) > 0:
        w = w / np.linalg.norm(w) * frac * nv * 1.5
    nw = np.linalg.norm(w)
    possible = N >= k and nw <= nv * (1 + 1e-12) and (N > k or abs(nw - nv) <= 1e-12 * max(1.0, nv))
    assume(abs(nw - nv) > 1e-9 * max(1.0, nv) or N > k)
    if not possible:
        with pytest.raises(ObstructedError):
            embed_trace_type(w, v)
        return
    f = embed_trace_type(w, v)
    assert pullback_linear(trace_type_tensor(v), f.matrix).max_abs_diff(trace_type_tensor(w)) <= 1e-12 * max(1.0, nv)
    np.testing.assert_allclose(f.matrix.T @ f.matrix, np.eye(k), atol=1e-12)


# -- lines ---------------------------------------------------------------------


def test_line_zero_value(rng):
    T = random_tensor(rng, 3)
    f = embed_line(0.0, T)
    u = f.matrix[:, 0]
    assert abs(T.cubic(u)) <= 1e-10
    assert np.linalg.norm(u) == pytest.approx(1.0, abs=1e-12)


def test_line_value_one_in_standard():
    u = embed_line(1.0, standard_tensor(3)).matrix[:, 0]
    assert np.sort(np.abs(u)) == pytest.approx([0, 0, 1], abs=1e-6)


def test_line_obstructions():
    T = standard_tensor(3)
    with pytest.raises(ObstructedError) as e:
        embed_line(comass1(T).value + 1, T)
    assert e.value.condition == "comass1"
    with pytest.raises(ObstructedError) as e:
        embed_line(0.3, SymTensor3(1, {(1, 1, 1): 1.0}))
    assert e.value.condition == "line_in_line"


@given(st.integers(0, 2**31), st.floats(-1, 1))
@settings(max_examples=30, deadline=None)
def test_line_contract(seed, frac):
    T = random_tensor(np.random.default_rng(seed), 3)
    c = frac * comass1(T).value
    f = embed_line(c, T)
    _linear_pullback_ok(f, np.eye(1), SymTensor3(1, {(1, 1, 1): c}), 1e-9)


# -- canonical forms --------------------------------------------------------------


def test_canonical_2d_already_canonical():
    cf = canonical_form_2d(SymTensor3(2, {(1, 1, 1): 1.0}))
    np.testing.assert_allclose(cf.rotation, np.eye(2), atol=1e-10)
    assert cf.coords == pytest.approx((1.0, 0.0, 0.0), abs=1e-10)


def test_canonical_2d_standard():
    cf = canonical_form_2d(standard_tensor(2))
    assert cf.coords[0] == pytest.approx(1.0, abs=1e-12)


def test_canonical_2d_zero_and_dim():
    assert canonical_form_2d(SymTensor3(2)).zero
    with pytest.raises(DimensionError):
        canonical_form_2d(standard_tensor(3))


@given(st.integers(0, 2**31), st.floats(0, 2 * math.pi))
@settings(max_examples=50, deadline=None)
def test_canonical_2d_rotation_invariant(seed, angle):
    T = random_tensor(np.random.default_rng(seed), 2)
    cf = canonical_form_2d(T)
    R = _rotation(angle)
    cr = canonical_form_2d(pullback_linear(T, R))
    assert cr.coords == pytest.approx(cf.coords, abs=1e-8)
    C = pullback_linear(T, cf.rotation)
    assert abs(C[1, 1, 2]) <= 1e-8
    assert cf.coords[0] == pytest.approx(comass1(T).value, abs=1e-9)
    assert np.linalg.det(cf.rotation) == pytest.approx(1.0, abs=1e-12)


def test_canonical_3_14_trace_type():
    T = trace_type_tensor([1.0, 0.0, 0.0])
    cf = canonical_form_3_14(T)
    assert cf.reassemble().max_abs_diff(T) <= 1e-10
    # T(e1, ., .) restricted to e1-perp is the identity
    assert cf.coeffs[1:] == pytest.approx([1.0, 1.0], abs=1e-9)


def test_canonical_3_14_zero():
    cf = canonical_form_3_14(SymTensor3(3))
    assert not np.any(cf.coeffs) and not np.any(cf.residual)


@pytest.mark.parametrize("seed", range(5))
def test_canonical_3_14_first_variation(seed):
    T = random_tensor(np.random.default_rng(seed), 3)
    cf = canonical_form_3_14(T)
    C = pullback_linear(T, cf.basis)
    for j in (2, 3):
        assert abs(C[1, 1, j]) <= 1e-8
    assert abs(C[1, 2, 3]) <= 1e-10
    assert cf.reassemble().max_abs_diff(T) <= 1e-10


# -- 2-D cross map ---------------------------------------------------------------


def test_2d_cross_zero():
    f = embed_2d_cross(0.0)
    assert full_norm(f.meta["pullback_tensor"]) <= 1e-15


@pytest.mark.parametrize("a2", [0.25, -0.25, 0.5, 0.1])
def test_2d_cross_records(a2):
    f = embed_2d_cross(a2)
    np.testing.assert_allclose(f.meta["pullback_metric"], np.diag([1.0, 2.0]), atol=1e-12)
    assert f.meta["off_form"] <= 1e-10
    assert f.meta["factor"] == pytest.approx(2.0 * f.meta["sign"], abs=1e-12)
    assert f.meta["T122"] == pytest.approx(2 * abs(a2), abs=1e-12)


def test_2d_cross_range():
    with pytest.raises(ValueError):
        embed_2d_cross(0.6)


# -- null embedding ----------------------------------------------------------------


@pytest.mark.parametrize("m", [1, 2, 3, 6])
def test_null_embedding(m):
    f = null_embedding(m)
    _linear_pullback_ok(f, np.eye(m), SymTensor3(m), 1e-12)


def test_null_embedding_after_isometry(rng):
    Q = np.linalg.qr(rng.normal(size=(4, 2)))[0]
    L = null_embedding(4).matrix @ Q
    assert full_norm(pullback_linear(standard_tensor(8), L)) <= 1e-15


def test_null_embedding_needs_m():
    with pytest.raises(DimensionError):
        null_embedding(0)


# -- scaling composition -------------------------------------------------------------


def test_scale_compose_zero_tensor():
    f1 = EmbeddingMap.linear(np.zeros((1, 2)), FlatTarget(standard_tensor(1)), "trivial")
    f2 = EmbeddingMap.linear(np.eye(2), FlatTarget(SymTensor3(2)), "id")
    f3 = scale_compose(f1, f2, 1.0)
    _linear_pullback_ok(f3, np.eye(2), SymTensor3(2), 1e-12)


def test_scale_compose_line():
    # constant structure (R^1, g = 4, T = 3)
    T = SymTensor3(1, {(1, 1, 1): 3.0})
    f1_sum = cubic_sum_embedding(T)
    g = np.array([[4.0]])
    s = 0.5 * max_scale(g, f1_sum.matrix.T @ f1_sum.matrix)
    C = np.sqrt(g - s * s * f1_sum.matrix.T @ f1_sum.matrix)
    f2 = EmbeddingMap.linear(C, FlatTarget(SymTensor3(1)), "residual")
    f3 = scale_compose(f1_sum, f2, s)
    _linear_pullback_ok(f3, g, T, 1e-12)


@given(st.integers(0, 2**31), st.integers(1, 3))
@settings(max_examples=25, deadline=None)
def test_constant_structure(seed, m):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, m))
    g = A @ A.T + m * np.eye(m)
    T = random_tensor(rng, m)
    f = embed_constant_structure(g, T)
    _linear_pullback_ok(f, g, T, 1e-9 * max(1.0, full_norm(T), float(np.max(g))))


def test_constant_structure_scale_too_large(rng):
    T = random_tensor(rng, 2)
    f1 = cubic_sum_embedding(T)
    s = 2 * max_scale(np.eye(2), f1.matrix.T @ f1.matrix)
    with pytest.raises(NotPositiveDefiniteError):
        embed_constant_structure(np.eye(2), T, s=s)


def test_scale_must_be_positive():
    f = null_embedding(1)
    with pytest.raises(ValueError):
        scale_compose(f, f, 0.0)


# -- maps and the verifier -------------------------------------------------------------


def test_verify_identity():
    f = EmbeddingMap.linear(np.eye(3), FlatTarget(standard_tensor(3)))
    rep = verify_pullback(f, np.eye(3), standard_tensor(3), sample_box(3, 10))
    assert rep.max_metric_error == 0.0
    assert rep.max_tensor_error == 0.0
    assert rep.ok(0.0, 0.0)


def test_verify_flags_rank_deficiency():
    f = EmbeddingMap.linear(np.array([[1.0, 1.0], [0.0, 0.0]]), FlatTarget(standard_tensor(2)))
    with pytest.warns(RuntimeWarning):
        rep = verify_pullback(f, np.eye(2), SymTensor3(2), sample_box(2, 3))
    assert len(rep.rank_deficient) == 3
    assert not rep.ok(10.0, 10.0)


def test_map_json_round_trip(rng):
    f = embed_trace_type([0.3, 0.1], rng.normal(size=4))
    g = EmbeddingMap.from_json_dict(f.to_json_dict())
    np.testing.assert_array_equal(g.matrix, f.matrix)
    assert g.target.tensor == f.target.tensor


def test_map_json_rejects():
    with pytest.raises(TensorFormatError):
        EmbeddingMap.from_json_dict({"kind": "curve"})
    curve = curve_into_cap4(CapEmbeddingParams(1, 0.0, R=0.01))
    with pytest.raises(TensorFormatError):
        curve.map.to_json_dict()


# -- the tangent-plane lemma --------------------------------------------------------------


def test_params_invariants():
    for n, A in [(1, 0.0), (1, 1.0), (4, 1.0), (2, 3.0), (9, 0.25)]:
        p = CapEmbeddingParams(n, A)
        assert p.A_bar == pytest.approx(max(4 * math.sqrt(n), 4 * math.sqrt(n) * A))
        assert n * p.lambda0**2 + 3 * n * (2 * p.A_bar) ** -2 == pytest.approx(4.0, abs=1e-12)
        assert np.linalg.norm(p.base_point) == pytest.approx(2 / math.sqrt(n), abs=1e-12)
    assert CapEmbeddingParams(4, 1.0).A_bar == 8.0


@pytest.mark.parametrize("kwargs", [{"n": 0, "A": 1.0}, {"n": 1, "A": -1.0}, {"n": 1, "A": 1.0, "R": 0.0}])
def test_params_reject(kwargs):
    with pytest.raises((ValueError, DimensionError)):
        CapEmbeddingParams(**kwargs)


def _check_direction(h, p):
    res = sublemma_direction(h, p)
    w = res.w
    assert abs(np.linalg.norm(w) - 1) <= 1e-12
    assert abs(w @ p.base_point) <= 1e-12
    assert abs(w @ h) <= 1e-12
    assert float((2.0 / p.base_point) @ w**3) >= 2 * p.A
    return res


def test_sublemma_case1_example():
    p = CapEmbeddingParams(4, 1.0)
    h = np.array([0.0, -1 / math.sqrt(2), 1 / math.sqrt(2), 0.0])
    res = _check_direction(h, p)
    assert res.case == 1 and res.path == "formula"
    raw, case = sublemma_formula_candidate(h, p)
    # the corrected formula vector satisfies the constraints before projection
    assert case == 1
    assert abs(raw @ p.base_point) <= 1e-12 and abs(raw @ h) <= 1e-12


def test_sublemma_case2_example():
    p = CapEmbeddingParams(4, 1.0)
    h = np.array([0.0, 1.0, 1.0, 1.0])
    res = _check_direction(h, p)
    assert res.case == 2 and res.path == "formula"


def test_sublemma_printed_formula_is_diagnostic_only():
    p = CapEmbeddingParams(4, 1.0)
    h = np.array([0.0, -1 / math.sqrt(2), 1 / math.sqrt(2), 0.0])
    printed, _ = sublemma_formula_candidate(h, p, printed=True)
    assert abs(printed @ p.base_point) > 1e-6


def test_sublemma_collinear_rejected():
    p = CapEmbeddingParams(1, 1.0)
    with pytest.raises(ValueError):
        sublemma_direction(3 * p.base_point, p)


def test_constraint_plane_orthonormal(rng):
    p = CapEmbeddingParams(2, 1.0)
    P = constraint_plane(rng.normal(size=4), p)
    np.testing.assert_allclose(P.T @ P, np.eye(2), atol=1e-12)
    assert np.max(np.abs(P.T @ p.base_point)) <= 1e-12


@given(
    st.sampled_from([(1, 1.0), (4, 1.0), (2, 3.0), (1, 0.0)]),
    st.lists(st.floats(-1, 1, allow_nan=False), min_size=4, max_size=4),
)
@settings(max_examples=150, deadline=None)
def test_sublemma_every_plane(nA, h):
    p = CapEmbeddingParams(*nA)
    h = np.array(h)
    hr = h - h[0] / p.base_point[0] * p.base_point
    assume(np.linalg.norm(hr) > 1e-6)
    res = _check_direction(h, p)
    best, _ = circle_search(h, p)
    assert best >= res.value - 1e-9


# -- the curve and the product ------------------------------------------------------------


def test_torus_meets_comass_condition():
    p = CapEmbeddingParams(1, 1.0)
    tor, worst = build_torus(p)
    assert worst >= 1.5 * p.A
    for ph, ps in [(0.0, 0.0), (1.0, 2.0), (4.0, 5.5)]:
        X, Xp, Xq = tor.point_and_tangents(ph, ps)
        assert np.linalg.norm(X) == pytest.approx(p.radius, abs=1e-12)
        assert abs(X @ Xp) <= 1e-12 and abs(X @ Xq) <= 1e-12
        assert np.all(X > 0)


def test_level_angles():
    abcd = (1.0, 0.2, -0.3, 0.5)
    for th in level_angles(abcd, 0.4):
        x, y = math.cos(th), math.sin(th)
        a, b, c, d = abcd
        assert a * x**3 + 3 * b * x * x * y + 3 * c * x * y * y + d * y**3 == pytest.approx(0.4, abs=1e-12)


@pytest.fixture(scope="module")
def curve_a1():
    return curve_into_cap4(CapEmbeddingParams(1, 1.0, R=1.0))


def test_curve_contract(curve_a1):
    c = curve_a1
    assert np.max(c.speed_error) <= 1e-5
    assert np.max(c.tensor_error) <= 1e-4
    assert np.max(np.abs(np.linalg.norm(c.points, axis=1) - 2.0)) <= 1e-9
    assert np.all(c.points > 0)
    assert c.t[-1] == pytest.approx(1.0)


def test_curve_map_between_nodes(curve_a1):
    f = curve_a1.map
    pts = np.random.default_rng(4).uniform(0, 1, size=(50, 1))
    rep = verify_pullback(f, np.eye(1), SymTensor3(1, {(1, 1, 1): 1.0}), pts)
    assert rep.max_metric_error <= 1e-4 and rep.max_tensor_error <= 1e-4
    for t in pts[:5]:
        assert np.linalg.norm(f(t)) == pytest.approx(2.0, abs=1e-9)
    with pytest.raises(ValueError):
        f(np.array([1.5]))


def test_curve_csv(curve_a1):
    lines = curve_a1.to_csv().splitlines()
    assert lines[0] == "t,x1,x2,x3,x4,speed_error,tensor_error"
    assert len(lines) == curve_a1.t.size + 1
    assert float(lines[-1].split(",")[0]) == pytest.approx(1.0)


def test_curve_zero_value():
    c = curve_into_cap4(CapEmbeddingParams(1, 0.0, R=0.2))
    assert np.max(c.speed_error) <= 1e-5
    assert np.max(c.tensor_error) <= 1e-5


@pytest.mark.slow
def test_curve_long():
    c = curve_into_cap4(CapEmbeddingParams(1, 1.0, R=10.0, step=1e-3))
    assert c.t[-1] == pytest.approx(10.0)
    assert c.t.size == 10001
    assert np.max(c.speed_error) <= 1e-5
    assert np.max(c.tensor_error) <= 1e-4
    assert np.max(np.abs(np.linalg.norm(c.points, axis=1) - 2.0)) <= 1e-9


def test_product_n1_is_curve(curve_a1):
    p = CapEmbeddingParams(1, 1.0)
    f = product_into_cap(p, curve_a1)
    for t in (0.0, 0.37, 1.0):
        np.testing.assert_array_equal(f(np.array([t])), curve_a1.map(np.array([t])))


def test_product_on_radius_two_sphere():
    p = CapEmbeddingParams(3, 1.0, R=0.05)
    f = product_into_cap(p)
    for theta in sample_box(3, 5, 0.0, 0.05, seed=2):
        assert np.linalg.norm(f(theta)) == pytest.approx(2.0, abs=1e-9)
    rep = verify_pullback(f, np.eye(3), standard_tensor(3), sample_box(3, 10, 0.0, 0.05, seed=3))
    assert rep.max_metric_error <= 1e-4 and rep.max_tensor_error <= 1e-4


def test_direction_field_failure_is_typed():
    # a value far above the circle maxima on the torus has no solution
    tor, _ = build_torus(CapEmbeddingParams(1, 1.0, R=0.01))
    with pytest.raises(ContractError):
        DirectionField(tor, 1e6).at(0.0, 0.0)

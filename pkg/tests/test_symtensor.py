"""Symmetric 3-tensors: construction, trace split, pullback, polarization, JSON."""

import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_tensor
from isostat.errors import DimensionError, NotPositiveDefiniteError, TensorFormatError
from isostat.symtensor import (
    MetricMatrix,
    SymTensor3,
    cap_tensor,
    diagonal,
    evaluate,
    full_norm,
    inner,
    orthonormal_components,
    polarize,
    project_trace,
    pullback_linear,
    standard_tensor,
    trace_type_tensor,
    trace_vector,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def tensors(draw, min_dim=1, max_dim=4):
    n = draw(st.integers(min_dim, max_dim))
    arr = draw(arrays(float, (n, n, n), elements=finite))
    return SymTensor3.from_dense(arr)


def _linear_system_oracle(f, n, rng):
    # fit the packed coefficients from sampled diagonal values
    triples = list(itertools.combinations_with_replacement(range(n), 3))
    X = rng.normal(size=(3 * len(triples), n))
    rows = []
    for x in X:
        row = []
        for t in triples:
            mult = len(set(itertools.permutations(t)))
            row.append(mult * x[t[0]] * x[t[1]] * x[t[2]])
        rows.append(row)
    coef = np.linalg.lstsq(np.array(rows), np.array([f(x) for x in X]), rcond=None)[0]
    return SymTensor3(n, {tuple(i + 1 for i in t): c for t, c in zip(triples, coef)})


# -- construction -------------------------------------------------------------


def test_dim_zero_rejected():
    with pytest.raises(DimensionError):
        SymTensor3(0)


def test_duplicate_triple_rejected():
    with pytest.raises(TensorFormatError):
        SymTensor3(2, {(1, 1, 2): 1.0, (2, 1, 1): 2.0})


def test_out_of_range_index_rejected():
    with pytest.raises(TensorFormatError):
        SymTensor3(2, {(1, 1, 3): 1.0})


def test_non_finite_value_rejected():
    with pytest.raises(TensorFormatError):
        SymTensor3(2, {(1, 1, 2): math.nan})


def test_from_dense_check_rejects_asymmetric():
    arr = np.zeros((2, 2, 2))
    arr[0, 0, 1] = 1.0
    with pytest.raises(TensorFormatError):
        SymTensor3.from_dense(arr, check=True)
    assert SymTensor3.from_dense(arr)[1, 1, 2] == pytest.approx(1 / 3)


def test_dense_is_read_only():
    T = standard_tensor(2)
    with pytest.raises(ValueError):
        T.dense[0, 0, 0] = 5.0


def test_entry_order_is_irrelevant():
    T = SymTensor3(3, {(3, 1, 2): 2.5})
    for p in itertools.permutations((1, 2, 3)):
        assert T[p] == 2.5


# -- trace type ---------------------------------------------------------------


def test_trace_type_zero_vector():
    assert full_norm(trace_type_tensor([0.0, 0.0])) == 0.0


def test_trace_type_entries_n2():
    T = trace_type_tensor([1.0, 0.0])
    assert T.coeffs == {(1, 1, 1): 3.0, (1, 2, 2): 1.0}


def test_trace_type_diagonal(rng):
    v = rng.normal(size=4)
    T = trace_type_tensor(v)
    for _ in range(5):
        x = rng.normal(size=4)
        assert T.cubic(x) == pytest.approx(3 * (v @ x) * (x @ x), rel=1e-12)


def test_trace_vector_of_trace_type(rng):
    for n in (1, 2, 5):
        v = rng.normal(size=n)
        np.testing.assert_allclose(trace_vector(trace_type_tensor(v)), (n + 2) * v, rtol=1e-12)


# -- project_trace ------------------------------------------------------------


def test_project_trace_on_trace_type(rng):
    v = rng.normal(size=3)
    dec = project_trace(trace_type_tensor(v))
    assert full_norm(dec.primitive) <= 1e-12
    np.testing.assert_allclose(dec.trace_vector, v, rtol=1e-12)


def test_project_trace_example_n2():
    dec = project_trace(SymTensor3(2, {(1, 1, 1): 1.0}))
    tp = dec.trace_part
    assert tp[1, 1, 1] == pytest.approx(0.75)
    assert tp[1, 2, 2] == pytest.approx(0.25)
    assert dec.primitive[1, 1, 1] == pytest.approx(0.25)
    assert dec.primitive[1, 2, 2] == pytest.approx(-0.25)


@given(tensors())
@settings(max_examples=60, deadline=None)
def test_project_trace_idempotent_and_orthogonal(T):
    dec = project_trace(T)
    scale = max(1.0, full_norm(T))
    assert np.linalg.norm(trace_vector(dec.primitive)) <= 1e-10 * scale
    again = project_trace(dec.trace_part)
    assert again.trace_part.max_abs_diff(dec.trace_part) <= 1e-10 * scale
    assert project_trace(dec.primitive).residual_norm <= 1e-10 * scale
    rng = np.random.default_rng(0)
    for _ in range(3):
        w = rng.normal(size=T.dim)
        assert abs(inner(dec.primitive, trace_type_tensor(w))) <= 1e-10 * scale * np.linalg.norm(w)


# -- evaluation and symmetry --------------------------------------------------


@given(tensors(), st.permutations([0, 1, 2]), st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_evaluation_symmetric_in_arguments(T, perm, seed):
    rng = np.random.default_rng(seed)
    xs = [rng.normal(size=T.dim) for _ in range(3)]
    base = evaluate(T, *xs)
    swapped = evaluate(T, *(xs[p] for p in perm))
    assert swapped == pytest.approx(base, rel=1e-12, abs=1e-12 * max(1.0, full_norm(T)))


def test_evaluate_rejects_wrong_length():
    with pytest.raises(DimensionError):
        evaluate(standard_tensor(3), [1, 0], [1, 0, 0], [1, 0, 0])


# -- pullback -----------------------------------------------------------------


def test_pullback_identity(rng):
    T = random_tensor(rng, 4)
    assert pullback_linear(T, np.eye(4)).max_abs_diff(T) <= 1e-14


def test_pullback_trace_type_projects_vector(rng):
    v = rng.normal(size=5)
    L = np.linalg.qr(rng.normal(size=(5, 3)))[0]
    got = pullback_linear(trace_type_tensor(v), L)
    assert got.max_abs_diff(trace_type_tensor(L.T @ v)) <= 1e-12


def test_pullback_standard_on_antidiagonal():
    L = np.array([[1.0], [-1.0]]) / math.sqrt(2)
    assert abs(pullback_linear(standard_tensor(2), L)[1, 1, 1]) <= 1e-16


def test_pullback_rank_deficient_warns():
    with pytest.warns(RuntimeWarning):
        pullback_linear(standard_tensor(3), np.array([[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]]))


def test_pullback_dimension_mismatch():
    with pytest.raises(DimensionError):
        pullback_linear(standard_tensor(3), np.eye(2))


@given(st.integers(0, 2**31), st.integers(1, 3), st.integers(1, 3))
@settings(max_examples=40, deadline=None)
def test_pullback_functorial(seed, k, extra):
    rng = np.random.default_rng(seed)
    n = k + extra
    N = n + 2
    T = random_tensor(rng, N)
    L1 = rng.normal(size=(N, n))
    L2 = rng.normal(size=(n, k))
    a = pullback_linear(pullback_linear(T, L1), L2)
    b = pullback_linear(T, L1 @ L2)
    assert a.max_abs_diff(b) <= 1e-12 * max(1.0, float(np.max(np.abs(b.dense))))


# -- polarization -------------------------------------------------------------


def test_polarize_zero():
    assert full_norm(polarize(lambda v: 0.0, 3)) == 0.0


def test_polarize_matches_linear_system_oracle(rng):
    f = lambda v: float(np.sum(v**3))
    oracle = _linear_system_oracle(f, 3, rng)
    assert oracle.max_abs_diff(standard_tensor(3)) <= 1e-10
    assert polarize(f, 3).max_abs_diff(oracle) <= 1e-10


def test_polarize_random_against_oracle(rng):
    T = random_tensor(rng, 3)
    oracle = _linear_system_oracle(diagonal(T), 3, rng)
    assert polarize(diagonal(T), 3).max_abs_diff(oracle) <= 1e-10


@given(tensors())
@settings(max_examples=60, deadline=None)
def test_polarize_inverts_diagonal(T):
    got = polarize(diagonal(T), T.dim)
    assert got.max_abs_diff(T) <= 1e-10 * max(1.0, float(np.max(np.abs(T.dense))))


# -- norms --------------------------------------------------------------------


def test_full_norm_examples():
    assert full_norm(SymTensor3(2)) == 0.0
    assert full_norm(SymTensor3(1, {(1, 1, 1): -2.5})) == 2.5
    assert full_norm(SymTensor3(2, {(1, 1, 2): 1.0})) == pytest.approx(math.sqrt(3))


@given(tensors())
@settings(max_examples=40, deadline=None)
def test_norm_is_sqrt_of_inner(T):
    assert full_norm(T) == pytest.approx(math.sqrt(inner(T, T)), rel=1e-12, abs=1e-300)


def test_cap_tensor_entries():
    T = cap_tensor([0.5, 2.0])
    assert T.coeffs == {(1, 1, 1): 4.0, (2, 2, 2): 1.0}
    with pytest.raises(DimensionError):
        cap_tensor([1.0, 0.0])


# -- metrics ------------------------------------------------------------------


def test_metric_rejects_indefinite():
    with pytest.raises(NotPositiveDefiniteError) as err:
        MetricMatrix([[1.0, 0.0], [0.0, -1.0]])
    assert "-1" in str(err.value)


def test_metric_rejects_asymmetric():
    with pytest.raises(NotPositiveDefiniteError):
        MetricMatrix([[1.0, 0.5], [0.0, 1.0]])


def test_orthonormal_frame(rng):
    A = rng.normal(size=(3, 3))
    g = MetricMatrix(A @ A.T + 3 * np.eye(3))
    E = g.orthonormal_frame()
    np.testing.assert_allclose(E.T @ g.entries @ E, np.eye(3), atol=1e-12)
    T = random_tensor(rng, 3)
    assert orthonormal_components(g, T).max_abs_diff(pullback_linear(T, E)) == 0.0


# -- JSON ---------------------------------------------------------------------


@given(tensors())
@settings(max_examples=40, deadline=None)
def test_json_round_trip(T):
    back = SymTensor3.loads(T.dumps())
    assert back == T


def test_json_writer_sorted_and_reader_any_order():
    T = SymTensor3(2, {(2, 2, 2): 1.0, (1, 1, 1): 2.0, (1, 2, 2): -1.0})
    data = T.to_json_dict()
    idx = [e["idx"] for e in data["entries"]]
    assert idx == sorted(idx)
    data["entries"].reverse()
    assert SymTensor3.from_json_dict(data) == T


@pytest.mark.parametrize(
    "doc",
    [
        {"entries": []},
        {"dim": 0, "entries": []},
        {"dim": 2, "entries": [{"idx": [1, 1], "val": 1}]},
        {"dim": 2, "entries": [{"idx": [1, 1, 2], "val": 1}, {"idx": [1, 1, 2], "val": 2}]},
        {"dim": 2, "entries": [{"idx": [1, 1, 3], "val": 1}]},
        {"dim": 2, "entries": [{"idx": [1, 1, 1], "val": "x"}]},
        [1, 2, 3],
    ],
)
def test_json_reader_rejects(doc):
    with pytest.raises((TensorFormatError, DimensionError)):
        SymTensor3.from_json_dict(doc)


def test_json_reader_sorts_indices():
    doc = {"dim": 2, "entries": [{"idx": [2, 1, 1], "val": 1.5}]}
    assert SymTensor3.from_json_dict(doc)[1, 1, 2] == 1.5


def test_from_dense_is_exactly_symmetric(rng):
    T = SymTensor3.from_dense(rng.normal(size=(4, 4, 4)))
    for p in itertools.permutations(range(3)):
        assert np.array_equal(np.transpose(T.dense, p), T.dense)


def test_json_dumps_is_plain_json():
    text = standard_tensor(2).dumps()
    assert json.loads(text)["dim"] == 2

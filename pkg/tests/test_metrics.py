import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from distgl.graph import UpperWeights
from distgl.ledger import MessageLedger
from distgl.metrics import (UndefinedMetric, build_report, frobenius_error, normalized_frobenius_error,
                            wasserstein_1d, wasserstein_distance, wasserstein_nonzero)

weights = st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=40)


def test_frobenius_counts_both_triangles():
    a = UpperWeights([3.0, 0.0, 0.0], 3)
    assert frobenius_error(a, UpperWeights.zeros(3)) == pytest.approx(math.sqrt(18))
    assert frobenius_error(a, a) == 0.0
    assert frobenius_error(a.values, np.zeros(3)) == pytest.approx(np.linalg.norm(a.to_dense()))


def test_normalized_frobenius_examples():
    a = UpperWeights([1.0, 0.0, 0.0], 3)
    b = UpperWeights([0.0, 0.0, 5.0], 3)
    assert normalized_frobenius_error(a, b) == pytest.approx(math.sqrt(2))
    assert normalized_frobenius_error(a, UpperWeights([7.0, 0.0, 0.0], 3)) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(UndefinedMetric):
        normalized_frobenius_error(a, UpperWeights.zeros(3))


def test_normalized_frobenius_matches_dense_definition():
    rng = np.random.default_rng(0)
    a, b = UpperWeights(rng.random(10), 5), UpperWeights(rng.random(10), 5)
    A, B = a.to_dense(), b.to_dense()
    want = np.linalg.norm(A / np.linalg.norm(A) - B / np.linalg.norm(B))
    assert normalized_frobenius_error(a, b) == pytest.approx(want, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(weights, st.data())
def test_normalized_frobenius_bounds_and_symmetry(u, data):
    v = data.draw(st.lists(st.floats(0, 10, allow_nan=False), min_size=len(u), max_size=len(u)))
    u, v = np.array(u), np.array(v)
    if not (u.any() and v.any()):
        return
    e = normalized_frobenius_error(u, v)
    assert 0.0 <= e <= 2.0 + 1e-12
    assert e == pytest.approx(normalized_frobenius_error(v, u))


def test_wasserstein_examples():
    assert wasserstein_1d([0.0, 0.0], [1.0, 1.0]) == 1.0
    assert wasserstein_1d([0.0, 1.0], [1.0, 0.0]) == 0.0
    assert wasserstein_1d([0.0, 2.0], [1.0, 1.0]) == 1.0
    with pytest.raises(UndefinedMetric):
        wasserstein_1d([], [1.0])


def expanded_w2(u, v):
    # equal-size oracle: repeat every sample so both sides have len(u)*len(v) atoms
    uu = np.repeat(np.sort(u), len(v))
    vv = np.repeat(np.sort(v), len(u))
    return math.sqrt(np.mean((uu - vv) ** 2))


@settings(max_examples=150, deadline=None)
@given(weights, weights)
def test_wasserstein_unequal_sizes_against_expansion(u, v):
    assert wasserstein_1d(u, v) == pytest.approx(expanded_w2(u, v), rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(weights, weights)
def test_order_one_matches_scipy(u, v):
    assert wasserstein_1d(u, v, p=1) == pytest.approx(scipy.stats.wasserstein_distance(u, v), rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(weights, weights, weights)
def test_wasserstein_is_a_metric(u, v, w):
    assert wasserstein_1d(u, v) == pytest.approx(wasserstein_1d(v, u))
    assert wasserstein_1d(u, w) <= wasserstein_1d(u, v) + wasserstein_1d(v, w) + 1e-9


def test_wasserstein_over_support_and_nonzero():
    a = UpperWeights([0.0, 2.0, 4.0], 3)
    b = UpperWeights([1.0, 0.0, 3.0], 3)
    assert wasserstein_distance(a, b, support=[2]) == 1.0
    # sorted (0,2,4) vs (0,1,3)
    assert wasserstein_distance(a, b) == pytest.approx(math.sqrt(2 / 3))
    # nonzero only: (2,4) vs (1,3)
    assert wasserstein_nonzero(a, b) == pytest.approx(1.0)


def test_report_turns_undefined_into_nan():
    led = MessageLedger()
    led.charge("weight_exchange", 5)
    rep = build_report(UpperWeights.zeros(3), UpperWeights([1.0, 0.0, 0.0], 3), led)
    row = rep.as_row()
    assert math.isnan(row["normalized_frobenius"]) and math.isnan(row["wasserstein_nonzero"])
    assert row["frobenius"] == pytest.approx(math.sqrt(2))
    assert row["total_messages"] == 5 and row["weight_exchange"] == 5

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnfix.constructions import ABS, EUCLIDEAN, k1_sum, k2_max, rho_max
from gnfix.core import (
    AxiomVerdict,
    GnMetric,
    UsageError,
    ball_contains,
    derived_metric,
    evaluate,
    is_symmetric_at,
    points_equal,
    repeat_head,
    repeat_tail,
)

reals = st.floats(-1e3, 1e3, allow_nan=False)
arity = st.integers(3, 6)


def test_evaluate_examples():
    assert evaluate(k2_max(ABS, 3), (0, 0, 0)) == 0
    assert evaluate(k2_max(ABS, 3), (0, 1, 3)) == 3
    assert evaluate(rho_max(4), (1, 1, 1, 5)) == 4


def test_evaluate_arity_mismatch():
    with pytest.raises(UsageError):
        evaluate(k2_max(ABS, 3), (0, 1))
    with pytest.raises(UsageError):
        k2_max(ABS, 3)(0, 1, 2, 3)


def test_arity_below_three_rejected():
    with pytest.raises(UsageError):
        GnMetric(2, lambda p: 0.0)


def test_derived_metric_examples():
    # K2: G(0,1,1)=1, G(0,0,1)=1
    assert derived_metric(k2_max(ABS, 3), 0.0, 1.0) == 2
    # K1 ordered double sums: 4 + 4
    assert derived_metric(k1_sum(ABS, 3), 0.0, 1.0) == 8
    for m in (k1_sum(ABS, 4), k2_max(ABS, 5), rho_max(3)):
        assert derived_metric(m, 2.5, 2.5) == 0


def test_is_symmetric_at_examples():
    assert is_symmetric_at(k2_max(ABS, 3), -3.0, 7.5)
    assert is_symmetric_at(k1_sum(ABS, 3), 0.0, 1.0)
    lopsided = GnMetric(3, lambda p: abs(p[0] - p[1]))
    assert is_symmetric_at(lopsided, 4.0, 4.0)
    assert not is_symmetric_at(lopsided, 0.0, 1.0)


def test_ball_contains_examples():
    m = k2_max(ABS, 3)
    assert ball_contains(m, 1.5, 1e-9, 1.5)
    assert not ball_contains(m, 0.0, 1.0, 2.0)
    assert ball_contains(m, 0.0, 3.0, 2.0)
    with pytest.raises(UsageError):
        ball_contains(m, 0.0, 0.0, 1.0)
    with pytest.raises(UsageError):
        ball_contains(m, 0.0, -1.0, 1.0)


def test_repeat_patterns():
    assert repeat_tail("x", "y", 4) == ("x", "y", "y", "y")
    assert repeat_head("x", "y", 4) == ("x", "x", "x", "y")


def test_points_equal():
    assert points_equal(1.0, 1.0 + 1e-13)
    assert not points_equal(1.0, 1.0 + 1e-11)
    assert points_equal(np.array([1.0, 2.0]), [1.0, 2.0])
    assert not points_equal(np.array([1.0, 2.0]), [1.0, 2.0, 3.0])
    assert points_equal("s0", "s0") and not points_equal("s0", "s1")


def test_verdict_witness_iff_failed():
    AxiomVerdict("G1", True)
    AxiomVerdict("G1", False, witness=(0.0,))
    with pytest.raises(UsageError):
        AxiomVerdict("G1", False)
    with pytest.raises(UsageError):
        AxiomVerdict("G1", True, witness=(0.0,))
    with pytest.raises(UsageError):
        AxiomVerdict("G9", True)


def _metrics(n):
    return [k1_sum(ABS, n), k2_max(ABS, n), rho_max(n)]


@settings(max_examples=200, deadline=None)
@given(arity, st.data())
def test_permutation_invariance_is_exact(n, data):
    pts = data.draw(st.lists(reals, min_size=n, max_size=n))
    perm = data.draw(st.permutations(pts))
    for m in _metrics(n):
        assert evaluate(m, pts) == evaluate(m, perm)


@settings(max_examples=200, deadline=None)
@given(arity, st.data(), reals)
def test_rectangle_inequality(n, data, z):
    xs = data.draw(st.lists(reals, min_size=n, max_size=n))
    for m in _metrics(n):
        lhs = evaluate(m, xs)
        rhs = evaluate(m, repeat_tail(xs[0], z, n)) + evaluate(m, [z] + xs[1:])
        assert lhs <= rhs + 1e-9


@settings(max_examples=200, deadline=None)
@given(arity, reals, reals)
def test_two_point_patterns_within_n_minus_one(n, x, y):
    for m in _metrics(n):
        assert evaluate(m, repeat_tail(x, y, n)) <= (n - 1) * evaluate(m, repeat_tail(y, x, n)) + 1e-9


@settings(max_examples=200, deadline=None)
@given(arity, reals, reals, st.floats(1e-6, 1e4))
def test_small_ball_inside_derived_ball(n, x, y, r):
    for m in _metrics(n):
        if ball_contains(m, x, r / n, y):
            assert derived_metric(m, x, y) < r


@settings(max_examples=200, deadline=None)
@given(arity, reals, reals, reals)
def test_derived_metric_is_a_metric(n, x, y, z):
    for m in _metrics(n):
        assert derived_metric(m, x, y) == derived_metric(m, y, x)
        assert derived_metric(m, x, z) <= derived_metric(m, x, y) + derived_metric(m, y, z) + 1e-9


@settings(max_examples=100, deadline=None)
@given(arity, st.lists(reals, min_size=2, max_size=2), st.lists(reals, min_size=2, max_size=2))
def test_symmetric_spaces_have_derived_metric_twice_g(n, x, y):
    x, y = np.array(x), np.array(y)
    for m in (k1_sum(EUCLIDEAN, n), k2_max(EUCLIDEAN, n)):
        g = evaluate(m, repeat_tail(x, y, n))
        assert math.isclose(derived_metric(m, x, y), 2 * g, rel_tol=1e-12, abs_tol=1e-12)

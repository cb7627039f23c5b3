import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_k1, brute_k2
from gnfix.constructions import (
    ABS,
    EUCLIDEAN,
    SUP,
    BoundedFunctionPoint,
    k1_sum,
    k2_max,
    rho_max,
    sup_metric_gn,
)
from gnfix.core import UsageError, evaluate, is_symmetric_at
from gnfix.verifier import (
    check_axioms,
    check_propositions,
    check_symmetry,
    random_tables,
    uniform_reals,
    uniform_vectors,
)

reals = st.floats(-100, 100, allow_nan=False)
absd = lambda a, b: abs(a - b)
eucl = lambda a, b: float(np.hypot(*(np.asarray(a) - np.asarray(b))))


@pytest.mark.parametrize("n", [2, 1, 0])
@pytest.mark.parametrize("build", [rho_max, lambda n: k1_sum(ABS, n), lambda n: k2_max(ABS, n)])
def test_arity_below_three(build, n):
    with pytest.raises(UsageError):
        build(n)


def test_rho_examples():
    assert evaluate(rho_max(3), (5, 5, 5)) == 0
    assert evaluate(rho_max(3), (0, 1, 3)) == brute_k2(absd, (0, 1, 3)) == 3
    assert evaluate(rho_max(5), (-2, 0, 0, 0, 1)) == brute_k2(absd, (-2, 0, 0, 0, 1)) == 3


def test_k1_examples():
    assert evaluate(k1_sum(ABS, 3), (0, 1, 2)) == brute_k1(absd, (0, 1, 2)) == 8
    assert evaluate(k1_sum(ABS, 4), (0, 0, 0, 1)) == brute_k1(absd, (0, 0, 0, 1)) == 6
    assert evaluate(k1_sum(EUCLIDEAN, 3), [np.array([1.0, 2.0])] * 3) == 0


def test_k2_examples():
    assert evaluate(k2_max(ABS, 3), (0, 1, 2)) == brute_k2(absd, (0, 1, 2)) == 2
    assert evaluate(k2_max(ABS, 4), (7, 7, 7, 7)) == 0
    pts = ((0, 0), (3, 4), (0, 0))
    assert evaluate(k2_max(EUCLIDEAN, 3), pts) == brute_k2(eucl, pts) == 5


def test_sup_metric_examples():
    grid = ("a", "b")
    m = sup_metric_gn(grid, 3)
    f = BoundedFunctionPoint(grid, [0.0, 2.0])
    g = BoundedFunctionPoint(grid, [1.0, 1.0])
    assert evaluate(m, (f, f, f)) == 0
    assert evaluate(m, (f, g, g)) == 1
    consts = [BoundedFunctionPoint.constant(range(4), c) for c in (0, 1, 3)]
    assert evaluate(sup_metric_gn(range(4), 3), consts) == 3


def test_sup_metric_rejects_foreign_grid():
    m = sup_metric_gn(("a", "b"), 3)
    f = BoundedFunctionPoint(("a", "b"), [0.0, 1.0])
    h = BoundedFunctionPoint(("a", "c"), [0.0, 1.0])
    with pytest.raises(UsageError):
        evaluate(m, (f, f, h))


def test_bounded_function_point_validation():
    with pytest.raises(UsageError):
        BoundedFunctionPoint(("a", "b"), [1.0])
    with pytest.raises(UsageError):
        BoundedFunctionPoint(("a",), [np.inf])
    f = BoundedFunctionPoint(("a", "b"), [1.0, 2.0])
    assert f == BoundedFunctionPoint(("a", "b"), np.array([1.0, 2.0]))
    assert f != BoundedFunctionPoint(("a", "b"), [1.0, 2.0 + 1e-15])
    assert f["b"] == 2.0
    with pytest.raises(ValueError):
        f.values[0] = 3.0


@settings(max_examples=200, deadline=None)
@given(st.integers(3, 6), st.data())
def test_constructions_match_enumeration(n, data):
    pts = data.draw(st.lists(reals, min_size=n, max_size=n))
    assert evaluate(rho_max(n), pts) == evaluate(k2_max(ABS, n), pts) == brute_k2(absd, pts)
    assert evaluate(k1_sum(ABS, n), pts) == pytest.approx(brute_k1(absd, pts), rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(3, 5), st.data())
def test_k2_sup_equals_sup_metric(n, data):
    grid = tuple(range(4))
    rows = data.draw(st.lists(st.lists(reals, min_size=4, max_size=4), min_size=n, max_size=n))
    tables = [BoundedFunctionPoint(grid, r) for r in rows]
    via_k2 = evaluate(k2_max(SUP, n), [np.array(r) for r in rows])
    assert evaluate(sup_metric_gn(grid, n), tables) == via_k2
    assert via_k2 == brute_k2(lambda a, b: a.sup_distance(b), tables)


@settings(max_examples=100, deadline=None)
@given(st.integers(3, 6), reals, reals)
def test_k1_and_k2_symmetric(n, x, y):
    assert is_symmetric_at(k1_sum(ABS, n), x, y, tol=1e-9)
    assert is_symmetric_at(k2_max(ABS, n), x, y, tol=0.0)


def _cases():
    for n in (3, 4, 5):
        yield f"rho{n}", rho_max(n), uniform_reals(seed=5)
        yield f"k1abs{n}", k1_sum(ABS, n), uniform_reals(seed=5)
        yield f"k2abs{n}", k2_max(ABS, n), uniform_reals(seed=5)
        yield f"k1eu{n}", k1_sum(EUCLIDEAN, n), uniform_vectors(2, seed=5)
        yield f"k2eu{n}", k2_max(EUCLIDEAN, n), uniform_vectors(2, seed=5)
        yield f"sup{n}", sup_metric_gn(range(6), n), random_tables(range(6), seed=5)


@pytest.mark.parametrize("name,metric,sampler", list(_cases()), ids=[c[0] for c in _cases()])
def test_every_construction_passes_the_verifier(name, metric, sampler):
    report = (
        check_axioms(metric, sampler, 2000)
        + check_propositions(metric, sampler, 2000)
        + check_symmetry(metric, sampler, 2000)
    )
    assert report.passed, report.summary()

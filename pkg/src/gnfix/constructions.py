"""Concrete generalized n-metrics built from ordinary metrics.

Every construction here is a function of the pairwise base distances of its
arguments.  The pairwise values are computed once per tuple, sorted, and then
reduced, so permuting the arguments reproduces the value bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .core import GnMetric, Point, UsageError


@dataclass(frozen=True)
class BaseMetric:
    """An ordinary metric acting on raw point arrays.

    ``batch(a, b)`` takes two arrays of identical shape ``(..., *point_shape)``
    and returns the distances with shape ``(...)``.
    """

    name: str
    batch: Callable[[np.ndarray, np.ndarray], np.ndarray]
    point_ndim: int = 0

    def __call__(self, x: Point, y: Point) -> float:
        return float(self.batch(as_raw(x), as_raw(y)))


def _abs_batch(a, b):
    return np.abs(a - b)


def _euclidean_batch(a, b):
    return np.sqrt(np.sum((a - b) ** 2, axis=-1))


def _sup_batch(a, b):
    return np.max(np.abs(a - b), axis=-1)


ABS = BaseMetric("abs", _abs_batch, 0)
EUCLIDEAN = BaseMetric("euclidean", _euclidean_batch, 1)
SUP = BaseMetric("sup", _sup_batch, 1)

BASE_METRICS = {m.name: m for m in (ABS, EUCLIDEAN, SUP)}


@dataclass(frozen=True, eq=False)
class BoundedFunctionPoint:
    """A real function tabulated on a finite state grid."""

    grid: tuple
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        grid = tuple(self.grid)
        values = np.array(self.values, dtype=float).reshape(-1)
        if len(grid) != values.size:
            raise UsageError(
                f"table has {values.size} entries for a grid of {len(grid)} states"
            )
        if not np.all(np.isfinite(values)):
            raise UsageError("bounded function tables must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: Sequence, c: float = 0.0) -> "BoundedFunctionPoint":
        return cls(tuple(grid), np.full(len(grid), float(c)))

    def __eq__(self, other):
        if not isinstance(other, BoundedFunctionPoint):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.grid, self.values.tobytes()))

    def __getitem__(self, state):
        return float(self.values[self.grid.index(state)])

    def sup_distance(self, other: "BoundedFunctionPoint") -> float:
        _check_same_grid((self, other))
        return float(np.max(np.abs(self.values - other.values), initial=0.0))


def as_raw(x: Point) -> np.ndarray:
    if isinstance(x, BoundedFunctionPoint):
        return x.values
    return np.asarray(x, dtype=float)


def _check_arity(n: int):
    if int(n) != n or n < 3:
        raise UsageError(f"arity must be >= 3, got {n}")


def _check_same_grid(points):
    grids = {p.grid for p in points}
    if len(grids) != 1:
        raise UsageError("all function points must share one state grid")


def pairwise_distances(base: BaseMetric, X: np.ndarray) -> np.ndarray:
    """Sorted distances over unordered index pairs, shape ``(trials, n(n-1)/2)``."""
    n = X.shape[1]
    pairs = list(combinations(range(n), 2))
    left = X[:, [i for i, _ in pairs]]
    right = X[:, [j for _, j in pairs]]
    return np.sort(base.batch(left, right), axis=1)


def _from_batch(batch, arity):
    def func(points):
        X = np.stack([as_raw(p) for p in points])[None]
        return float(batch(X)[0])

    return func


def k2_max(d: BaseMetric, n: int) -> GnMetric:
    """Largest pairwise base distance among the arguments."""
    _check_arity(n)

    def batch(X):
        return pairwise_distances(d, np.asarray(X, dtype=float))[:, -1]

    return GnMetric(n, _from_batch(batch, n), batch, name=f"k2_max[{d.name},{n}]")


def k1_sum(d: BaseMetric, n: int) -> GnMetric:
    """Double sum of base distances over all ordered index pairs."""
    _check_arity(n)

    def batch(X):
        # ordered pairs: each unordered pair twice, diagonal terms vanish
        return 2.0 * np.sum(pairwise_distances(d, np.asarray(X, dtype=float)), axis=1)

    return GnMetric(n, _from_batch(batch, n), batch, name=f"k1_sum[{d.name},{n}]")


def rho_max(n: int) -> GnMetric:
    """Largest pairwise absolute difference of real arguments."""
    _check_arity(n)
    inner = k2_max(ABS, n)
    return GnMetric(n, inner.func, inner.batch, name=f"rho_max[{n}]")


def sup_metric_gn(state_grid: Sequence, n: int) -> GnMetric:
    """Largest pairwise sup distance among tables on ``state_grid``."""
    _check_arity(n)
    grid = tuple(state_grid)
    inner = k2_max(SUP, n)

    def func(points):
        for p in points:
            if not isinstance(p, BoundedFunctionPoint) or p.grid != grid:
                raise UsageError("function points must be tabulated on the metric's state grid")
        return inner.func(points)

    return GnMetric(n, func, inner.batch, name=f"sup_metric[{len(grid)} states,{n}]")


CONSTRUCTIONS = {
    "rho_max": lambda base, n: rho_max(n),
    "k1_sum": k1_sum,
    "k2_max": k2_max,
}

"""Generalized n-metrics: the core abstraction and its pointwise predicates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

import numpy as np

Point = Any

DEFAULT_TOL = 1e-12

AXIOM_IDS = (
    "G1", "G2", "G3", "G4", "G5",
    "SYMMETRY", "PROP15", "BALL_CONTAIN", "DG_TRIANGLE", "CONVERGENCE",
)


class UsageError(ValueError):
    """Raised when an operation is called outside its preconditions."""


class NumericalFailure(ArithmeticError):
    """Raised when an iterate or metric value stops being finite."""


@dataclass(frozen=True)
class GnMetric:
    """An n-argument distance functional on some carrier set.

    ``func`` maps a length-``arity`` sequence of points to a float.  ``batch``,
    when given, maps an array of shape ``(trials, arity, *point_shape)`` of raw
    point data to an array of ``trials`` values, and must agree bit-for-bit
    with ``func`` on every row.  The verifier uses it to keep large sampling
    runs cheap.
    """

    arity: int
    func: Callable[[Sequence[Point]], float]
    batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "G"

    def __post_init__(self):
        if int(self.arity) != self.arity or self.arity < 3:
            raise UsageError(f"arity must be >= 3, got {self.arity}")

    def __call__(self, *points: Point) -> float:
        return evaluate(self, points)


@dataclass(frozen=True)
class AxiomVerdict:
    axiom_id: str
    passed: bool
    trials: int = 0
    failures: int = 0
    witness: Optional[tuple] = None
    values: Optional[tuple] = None
    detail: str = ""

    def __post_init__(self):
        if self.axiom_id not in AXIOM_IDS:
            raise UsageError(f"unknown axiom id {self.axiom_id!r}")
        if self.passed == (self.witness is not None):
            raise UsageError("a witness is required exactly when the verdict fails")


def evaluate(metric: GnMetric, points: Sequence[Point]) -> float:
    if len(points) != metric.arity:
        raise UsageError(
            f"{metric.name} takes {metric.arity} points, got {len(points)}"
        )
    return float(metric.func(tuple(points)))


def repeat_tail(x: Point, y: Point, n: int) -> tuple:
    """The tuple ``(x, y, ..., y)`` of length ``n``."""
    return (x,) + (y,) * (n - 1)


def repeat_head(x: Point, y: Point, n: int) -> tuple:
    """The tuple ``(x, ..., x, y)`` of length ``n``."""
    return (x,) * (n - 1) + (y,)


def derived_metric(metric: GnMetric, x: Point, y: Point) -> float:
    """Ordinary metric induced by ``metric``: G(x,y,...,y) + G(x,...,x,y)."""
    n = metric.arity
    return evaluate(metric, repeat_tail(x, y, n)) + evaluate(metric, repeat_head(x, y, n))


def is_symmetric_at(metric: GnMetric, x: Point, y: Point, tol: float = DEFAULT_TOL) -> bool:
    n = metric.arity
    lhs = evaluate(metric, repeat_tail(x, y, n))
    rhs = evaluate(metric, repeat_head(x, y, n))
    return abs(lhs - rhs) <= tol


def ball_contains(metric: GnMetric, center: Point, radius: float, y: Point) -> bool:
    if not radius > 0:
        raise UsageError(f"radius must be positive, got {radius}")
    return evaluate(metric, repeat_tail(center, y, metric.arity)) < radius


def points_equal(x: Point, y: Point, tol: float = DEFAULT_TOL) -> bool:
    """Decidable point equality.

    Real scalars and vectors compare up to ``tol`` in every coordinate;
    anything else (tabulated functions, grid labels) compares exactly.
    """
    if isinstance(x, (int, float, np.number, np.ndarray, tuple, list)):
        a = np.asarray(x, dtype=float)
        b = np.asarray(y, dtype=float)
        if a.shape != b.shape:
            return False
        return bool(np.all(np.abs(a - b) <= tol))
    return bool(x == y)

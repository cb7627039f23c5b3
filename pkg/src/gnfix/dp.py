"""Discretized Bellman-type functional equations solved as fixed-point problems.

A problem lives on finite state and decision grids.  The return function f
solves

    f(x) = max_y [ g(x, y) + M(x, y, f(tau(x, y))) ]

and is computed by Picard iteration of the right-hand side in the space of
tables with the sup-distance generalized n-metric.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .constructions import BoundedFunctionPoint, sup_metric_gn
from .core import DEFAULT_TOL, UsageError
from .fixed_point import IterationTrace, picard_iterate
from .formatting import fmt_float

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class IntegrityError(ValueError):
    """Problem tables are inconsistent with their grids."""


class LipschitzError(ValueError):
    """The aggregator does not satisfy its declared Lipschitz bound."""

    def __init__(self, report):
        super().__init__(report.summary())
        self.report = report


class ConvergenceError(RuntimeError):
    def __init__(self, trace: IterationTrace):
        super().__init__(
            f"value iteration stopped without converging ({trace.status} after "
            f"{trace.iterations} iterations)"
        )
        self.trace = trace


# -- aggregators -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AffineAggregator:
    """M(x, y, a) = beta * a + c(x, y)."""

    beta: float
    offset: Optional[np.ndarray] = None

    @property
    def lipschitz(self) -> float:
        return abs(self.beta)

    def apply(self, X, Y, A):
        out = self.beta * np.asarray(A, dtype=float)
        if self.offset is not None:
            out = out + self.offset[X, Y]
        return out

    def value(self, x: int, y: int, a: float) -> float:
        c = 0.0 if self.offset is None else float(self.offset[x, y])
        return self.beta * a + c

    def describe(self) -> str:
        return f"affine(beta={fmt_float(self.beta)})"


@dataclass(frozen=True, eq=False)
class CallbackAggregator:
    """General M given as a vectorized callable ``func(x_idx, y_idx, a)``
    together with its declared Lipschitz constant in ``a``."""

    func: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    lipschitz: float
    name: str = "callback"

    def apply(self, X, Y, A):
        return np.asarray(self.func(X, Y, np.asarray(A, dtype=float)), dtype=float)

    def value(self, x: int, y: int, a: float) -> float:
        return float(self.func(np.array(x), np.array(y), np.array(float(a))))

    def describe(self) -> str:
        return f"{self.name}(r={fmt_float(self.lipschitz)})"


def _scaled(fn, label):
    def build(scale: float = 0.5):
        scale = float(scale)
        return CallbackAggregator(lambda x, y, a: scale * fn(a), abs(scale), f"{label}[{scale:g}]")

    return build


BUILTIN_AGGREGATORS = {
    "sin_scaled": _scaled(np.sin, "sin_scaled"),
    "tanh_scaled": _scaled(np.tanh, "tanh_scaled"),
}


# -- problem -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DpProblem:
    """Deterministic decision process on finite grids.

    ``reward[i, j]`` is g(states[i], decisions[j]); ``transition[i, j]`` is the
    index of tau(states[i], decisions[j]) in ``states``.
    """

    states: tuple
    decisions: tuple
    reward: np.ndarray
    transition: np.ndarray
    aggregator: object

    def __post_init__(self):
        states, decisions = tuple(self.states), tuple(self.decisions)
        shape = (len(states), len(decisions))
        if not all(shape):
            raise IntegrityError("state and decision grids must be non-empty")
        if len(set(states)) != len(states) or len(set(decisions)) != len(decisions):
            raise IntegrityError("grid labels must be unique")
        reward = np.array(self.reward, dtype=float)
        transition = np.array(self.transition)
        if reward.shape != shape:
            raise IntegrityError(f"reward table has shape {reward.shape}, expected {shape}")
        if transition.shape != shape:
            raise IntegrityError(f"transition table has shape {transition.shape}, expected {shape}")
        if not np.all(np.isfinite(reward)):
            raise IntegrityError("reward table must be finite")
        if not np.issubdtype(transition.dtype, np.integer):
            raise IntegrityError("transition table must hold state indices")
        bad = (transition < 0) | (transition >= shape[0])
        if bad.any():
            i, j = map(int, np.argwhere(bad)[0])
            raise IntegrityError(
                f"transition({states[i]!r}, {decisions[j]!r}) = {int(transition[i, j])} "
                "is not a state index"
            )
        r = self.aggregator.lipschitz
        if not 0.0 <= r < 1.0:
            raise IntegrityError(f"declared Lipschitz constant must lie in [0, 1), got {r}")
        offset = getattr(self.aggregator, "offset", None)
        if offset is not None and np.shape(offset) != shape:
            raise IntegrityError(f"aggregator offset has shape {np.shape(offset)}, expected {shape}")
        reward.setflags(write=False)
        transition.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "decisions", decisions)
        object.__setattr__(self, "reward", reward)
        object.__setattr__(self, "transition", transition)

    @classmethod
    def from_labels(cls, states, decisions, reward, transition, aggregator) -> "DpProblem":
        """Build a problem whose transition table names target states by label."""
        states = tuple(states)
        index = {s: i for i, s in enumerate(states)}
        if len(index) != len(states):
            raise IntegrityError("grid labels must be unique")
        rows = []
        for i, row in enumerate(transition):
            out = []
            for j, target in enumerate(row):
                if target not in index:
                    raise IntegrityError(
                        f"transition[{i}][{j}] = {target!r} is not in the state grid"
                    )
                out.append(index[target])
            rows.append(out)
        return cls(states, tuple(decisions), reward, np.array(rows, dtype=int), aggregator)

    @property
    def r(self) -> float:
        return self.aggregator.lipschitz

    @property
    def shape(self) -> tuple:
        return self.reward.shape

    def index_grids(self):
        return np.indices(self.shape)

    def zero(self) -> BoundedFunctionPoint:
        return BoundedFunctionPoint.constant(self.states, 0.0)

    def value_bound(self, r: Optional[float] = None) -> float:
        """Radius V with every iterate from the zero table inside [-V, V]."""
        r = self.r if r is None else r
        X, Y = self.index_grids()
        base = self.reward + self.aggregator.apply(X, Y, np.zeros(self.shape))
        return float(np.max(np.abs(base))) / (1.0 - r) + 1.0


# -- operator ----------------------------------------------------------------


def _q_values(problem: DpProblem, f: BoundedFunctionPoint) -> np.ndarray:
    if f.grid != problem.states:
        raise IntegrityError("value table is not defined on the problem's state grid")
    X, Y = problem.index_grids()
    return problem.reward + problem.aggregator.apply(X, Y, f.values[problem.transition])


def bellman_apply(problem: DpProblem, f: BoundedFunctionPoint) -> BoundedFunctionPoint:
    """(Tf)(x) = max over decisions y of g(x,y) + M(x, y, f(tau(x,y)))."""
    return BoundedFunctionPoint(problem.states, _q_values(problem, f).max(axis=1))


def greedy_decisions(problem: DpProblem, f: BoundedFunctionPoint) -> tuple:
    """Maximizing decision per state; ties go to the lowest decision index."""
    best = np.argmax(_q_values(problem, f), axis=1)
    return tuple(problem.decisions[j] for j in best)


# -- Lipschitz check ---------------------------------------------------------


@dataclass(frozen=True)
class LipschitzReport:
    r: float
    passed: bool
    exact: bool
    samples: int
    violations: int
    interval: tuple
    witness: Optional[tuple] = None  # (state, decision, a, b)
    values: Optional[tuple] = None  # (|M(a) - M(b)|, r |a - b|)

    def summary(self) -> str:
        how = "exact" if self.exact else f"sampled, {self.samples} value pairs"
        line = (
            f"lipschitz: r={fmt_float(self.r)} {'pass' if self.passed else 'FAIL'} ({how}; "
            f"interval [{fmt_float(self.interval[0])}, {fmt_float(self.interval[1])}])"
        )
        if not self.passed:
            s, d, a, b = self.witness
            line += (
                f" witness state={s!r} decision={d!r} a={fmt_float(a)} b={fmt_float(b)}: "
                f"{fmt_float(self.values[0])} > {fmt_float(self.values[1])}"
            )
        return line


def verify_M_lipschitz(
    problem: DpProblem,
    r: float,
    value_samples: int = 1000,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    interval: Optional[Sequence[float]] = None,
) -> LipschitzReport:
    """Check |M(x,y,a) - M(x,y,b)| <= r |a - b| for every grid pair (x, y).

    Affine aggregators are decided exactly from their slope.  Anything else is
    sampled on ``interval``, by default [-V, V] with V = max|g + M(.,.,0)|/(1-r) + 1.
    """
    if not 0.0 <= r < 1.0:
        raise UsageError(f"r must lie in [0, 1), got {r}")
    lo, hi = (-problem.value_bound(r), problem.value_bound(r)) if interval is None else map(float, interval)
    agg = problem.aggregator
    if isinstance(agg, AffineAggregator):
        if abs(agg.beta) <= r:
            return LipschitzReport(r, True, True, 0, 0, (lo, hi))
        lhs = abs(agg.value(0, 0, lo) - agg.value(0, 0, hi))
        return LipschitzReport(
            r, False, True, 0, 1, (lo, hi),
            (problem.states[0], problem.decisions[0], lo, hi), (lhs, r * (hi - lo)),
        )

    if value_samples < 1:
        raise UsageError("value_samples must be >= 1")
    S, D = problem.shape
    rng = np.random.default_rng([int(seed)])
    A = rng.uniform(lo, hi, size=(S, D, value_samples))
    B = rng.uniform(lo, hi, size=(S, D, value_samples))
    X, Y = np.indices((S, D, value_samples))[:2]
    lhs = np.abs(agg.apply(X, Y, A) - agg.apply(X, Y, B))
    rhs = r * np.abs(A - B)
    failed = lhs > rhs + tol
    count = int(failed.sum())
    if count == 0:
        return LipschitzReport(r, True, False, S * D * value_samples, 0, (lo, hi))
    i, j, k = map(int, np.argwhere(failed)[0])
    a, b = float(A[i, j, k]), float(B[i, j, k])
    values = (abs(agg.value(i, j, a) - agg.value(i, j, b)), r * abs(a - b))
    return LipschitzReport(
        r, False, False, S * D * value_samples, count, (lo, hi),
        (problem.states[i], problem.decisions[j], a, b), values,
    )


# -- solver ------------------------------------------------------------------


@dataclass(frozen=True)
class ValueFunction:
    table: BoundedFunctionPoint
    residual: float
    iterations: int

    def __getitem__(self, state) -> float:
        return self.table[state]


@dataclass(frozen=True)
class DpSolution:
    value: ValueFunction
    trace: IterationTrace
    lipschitz: LipschitzReport
    policy: tuple

    def to_csv(self) -> str:
        """state, value, and the maximizing decision (a convenience column)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["state", "value", "argmax_decision"])
        for s, v, d in zip(self.value.table.grid, self.value.table.values, self.policy):
            w.writerow([s, fmt_float(v), d])
        return buf.getvalue()

    def summary(self) -> str:
        return "\n".join([
            self.lipschitz.summary(),
            self.trace.summary().splitlines()[0],
            f"  functional-equation residual={fmt_float(self.value.residual)}",
        ])


def solve(
    problem: DpProblem,
    n: int = 3,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    start: Optional[BoundedFunctionPoint] = None,
    lipschitz_samples: int = 1000,
    seed: int = 0,
) -> DpSolution:
    """Value iteration from the zero table (or ``start``) to residual ``tol``."""
    report = verify_M_lipschitz(problem, problem.r, lipschitz_samples, seed)
    if not report.passed:
        raise LipschitzError(report)
    metric = sup_metric_gn(problem.states, n)
    f0 = problem.zero() if start is None else start
    trace = picard_iterate(lambda f: bellman_apply(problem, f), f0, metric, tol, max_iter, problem.r)
    if not trace.converged:
        raise ConvergenceError(trace)
    f = trace.fixed_point
    residual = f.sup_distance(bellman_apply(problem, f))
    return DpSolution(
        ValueFunction(f, residual, trace.iterations), trace, report, greedy_decisions(problem, f)
    )


def brute_force_horizon(problem: DpProblem, horizon: int) -> BoundedFunctionPoint:
    """Apply the finite-horizon recursion ``horizon`` times to the zero table,
    one state and decision at a time."""
    if horizon < 0:
        raise UsageError("horizon must be >= 0")
    reward = problem.reward.tolist()
    nxt = problem.transition.tolist()
    agg = problem.aggregator
    S, D = problem.shape
    f = [0.0] * S
    for _ in range(horizon):
        f = [
            max(reward[x][y] + agg.value(x, y, f[nxt[x][y]]) for y in range(D))
            for x in range(S)
        ]
    return BoundedFunctionPoint(problem.states, f)


# -- ingestion ---------------------------------------------------------------


def _table(raw, shape, name):
    arr = np.array(raw, dtype=object)
    if arr.size != shape[0] * shape[1]:
        raise IntegrityError(f"{name} needs {shape[0]}x{shape[1]} entries, got {arr.size}")
    return arr.reshape(shape)


def problem_from_dict(data: dict) -> DpProblem:
    """Build a problem from parsed config data (row-major tables)."""
    missing = [k for k in ("states", "decisions", "reward", "transition", "aggregator") if k not in data]
    if missing:
        raise IntegrityError(f"problem is missing field(s): {', '.join(missing)}")
    states, decisions = list(data["states"]), list(data["decisions"])
    shape = (len(states), len(decisions))
    reward = _table(data["reward"], shape, "reward").astype(float)
    transition = _table(data["transition"], shape, "transition").tolist()

    spec = dict(data["aggregator"])
    kind = spec.pop("kind", None)
    if kind == "affine":
        if "beta" not in spec:
            raise IntegrityError("affine aggregator needs beta")
        offset = spec.get("offset")
        offset = None if offset is None else _table(offset, shape, "aggregator.offset").astype(float)
        agg = AffineAggregator(float(spec["beta"]), offset)
    elif kind == "builtin":
        name = spec.pop("name", None)
        if name not in BUILTIN_AGGREGATORS:
            raise IntegrityError(
                f"unknown builtin aggregator {name!r}; choose from {sorted(BUILTIN_AGGREGATORS)}"
            )
        agg = BUILTIN_AGGREGATORS[name](**spec)
    else:
        raise IntegrityError(f"aggregator.kind must be 'affine' or 'builtin', got {kind!r}")
    return DpProblem.from_labels(states, decisions, reward, transition, agg)


def load_problem(path) -> DpProblem:
    with open(Path(path), "rb") as fh:
        return problem_from_dict(tomllib.load(fh))

"""Sampling-based checks of the generalized n-metric axioms and their consequences.

Each property draws its own random stream from ``(seed, property index)`` so
reports do not depend on which properties were requested or in what order.
All trials of a property are evaluated as one batch; the reported witness is
always the failing trial with the lowest index.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .constructions import BoundedFunctionPoint
from .core import (
    DEFAULT_TOL,
    AxiomVerdict,
    GnMetric,
    Point,
    UsageError,
    derived_metric,
    evaluate,
    repeat_head,
    repeat_tail,
)
from .formatting import fmt_float, fmt_point

_STREAM = {
    "G1": 1, "G2": 2, "G3": 3, "G4": 4, "G5": 5,
    "SYMMETRY": 6, "PROP15": 7, "BALL_CONTAIN": 8, "DG_TRIANGLE": 9,
}


def _scalar_point(raw):
    return float(raw)


def _vector_point(raw):
    return np.array(raw, dtype=float)


@dataclass(frozen=True)
class Sampler:
    """Reproducible source of random points.

    ``draw(rng, shape)`` returns raw point data of shape ``shape + point_shape``;
    ``to_point`` turns one raw entry into a carrier point.  Two raw entries
    are the same point when they differ by at most ``eq_tol`` everywhere.
    """

    draw: Callable[[np.random.Generator, tuple], np.ndarray]
    seed: int = 0
    to_point: Callable[[np.ndarray], Point] = _scalar_point
    eq_tol: float = DEFAULT_TOL

    def rng(self, *key: int) -> np.random.Generator:
        return np.random.default_rng([int(self.seed), *key])

    def sample(self, rng: np.random.Generator) -> Point:
        return self.to_point(self.draw(rng, (1,))[0])

    def with_seed(self, seed: int) -> "Sampler":
        return Sampler(self.draw, seed, self.to_point, self.eq_tol)


def uniform_reals(low: float = -10.0, high: float = 10.0, seed: int = 0) -> Sampler:
    return Sampler(lambda rng, shape: rng.uniform(low, high, size=shape), seed)


def uniform_vectors(dim: int, low: float = -10.0, high: float = 10.0, seed: int = 0) -> Sampler:
    return Sampler(
        lambda rng, shape: rng.uniform(low, high, size=tuple(shape) + (dim,)),
        seed,
        _vector_point,
    )


def constant_sampler(value: float = 0.0, seed: int = 0) -> Sampler:
    return Sampler(lambda rng, shape: np.full(shape, float(value)), seed)


def random_tables(grid: Sequence, low: float = -10.0, high: float = 10.0, seed: int = 0) -> Sampler:
    grid = tuple(grid)
    return Sampler(
        lambda rng, shape: rng.uniform(low, high, size=tuple(shape) + (len(grid),)),
        seed,
        lambda raw: BoundedFunctionPoint(grid, raw),
        eq_tol=0.0,
    )


@dataclass(frozen=True)
class VerificationReport:
    metric: str
    verdicts: tuple
    trials: int
    seed: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def __getitem__(self, axiom_id: str) -> AxiomVerdict:
        for v in self.verdicts:
            if v.axiom_id == axiom_id:
                return v
        raise KeyError(axiom_id)

    def __add__(self, other: "VerificationReport") -> "VerificationReport":
        return VerificationReport(
            self.metric, self.verdicts + other.verdicts, self.trials, self.seed, self.tolerance
        )

    def csv_rows(self):
        for v in self.verdicts:
            yield [
                self.metric,
                v.axiom_id,
                v.trials,
                v.failures,
                "pass" if v.passed else "FAIL",
                "" if v.witness is None else fmt_point(v.witness),
                "" if v.values is None else " ".join(fmt_float(x) for x in v.values),
            ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerows(self.csv_rows())
        return buf.getvalue()

    def summary(self) -> str:
        lines = [
            f"{self.metric}: seed={self.seed} trials={self.trials} "
            f"tol={fmt_float(self.tolerance)}"
        ]
        for v in self.verdicts:
            line = f"  {v.axiom_id:<13} {'pass' if v.passed else 'FAIL'} ({v.failures}/{v.trials})"
            if not v.passed:
                line += f" witness={fmt_point(v.witness)}"
                if v.detail:
                    line += f" [{v.detail}]"
            lines.append(line)
        return "\n".join(lines)


CSV_HEADER = ["metric", "property", "trials", "failures", "verdict", "witness", "values"]


# -- batch helpers -----------------------------------------------------------


def _evaluate_rows(metric: GnMetric, sampler: Sampler, X: np.ndarray) -> np.ndarray:
    if metric.batch is not None:
        return np.asarray(metric.batch(X), dtype=float)
    return np.array(
        [evaluate(metric, [sampler.to_point(p) for p in row]) for row in X], dtype=float
    )


def _distinct(sampler: Sampler, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = np.abs(a - b)
    if diff.ndim > 1:
        diff = diff.reshape(diff.shape[0], -1).max(axis=1)
    return diff > sampler.eq_tol


def _stack(*cols: np.ndarray) -> np.ndarray:
    return np.stack(cols, axis=1)


def _tail(x, y, n):
    return _stack(x, *([y] * (n - 1)))


def _head(x, y, n):
    return _stack(*([x] * (n - 1)), y)


def _draw_tuples(sampler: Sampler, rng: np.random.Generator, trials: int, n: int) -> np.ndarray:
    """Random n-tuples in which about a quarter of the slots repeat an earlier point."""
    X = np.array(sampler.draw(rng, (trials, n)), dtype=float)
    repeat = rng.random((trials, n)) < 0.25
    source = rng.random((trials, n))
    for j in range(1, n):
        rows = np.nonzero(repeat[:, j])[0]
        src = np.floor(source[rows, j] * j).astype(int)
        X[rows, j] = X[rows, src]
    return X


def _bad(*values: np.ndarray, tol: float) -> np.ndarray:
    out = np.zeros(values[0].shape, dtype=bool)
    for v in values:
        out |= ~np.isfinite(v) | (v < -tol)
    return out


def _verdict(
    axiom_id: str,
    metric: GnMetric,
    sampler: Sampler,
    failed: np.ndarray,
    tested: np.ndarray,
    witness_rows,
    recompute,
    detail: str,
    extra=None,
) -> AxiomVerdict:
    failed = failed & tested
    count = int(failed.sum())
    trials = int(tested.sum())
    if count == 0:
        return AxiomVerdict(axiom_id, True, trials, 0)
    i = int(np.argmax(failed))
    points = tuple(sampler.to_point(p) for p in witness_rows(i))
    if extra is not None:
        points += tuple(float(e) for e in extra(i))
    return AxiomVerdict(axiom_id, False, trials, count, points, recompute(points), detail)


def _all(trials):
    return np.ones(trials, dtype=bool)


# -- axiom checks ------------------------------------------------------------


def check_axioms(
    metric: GnMetric, sampler: Sampler, trials: int = 10_000, tol: float = DEFAULT_TOL
) -> VerificationReport:
    """Sample each of G1..G5 ``trials`` times and collect witnessed violations."""
    if trials < 1:
        raise UsageError("trials must be >= 1")
    n = metric.arity
    G = lambda pts: evaluate(metric, pts)
    verdicts = []

    # G1: constant tuples vanish
    rng = sampler.rng(_STREAM["G1"])
    x = np.asarray(sampler.draw(rng, (trials,)), dtype=float)
    X = _stack(*([x] * n))
    v = _evaluate_rows(metric, sampler, X)
    verdicts.append(_verdict(
        "G1", metric, sampler, (np.abs(v) > tol) | _bad(v, tol=tol), _all(trials),
        lambda i: X[i], lambda p: (G(p),), "G(x,...,x) != 0",
    ))

    # G2: G(x,...,x,y) > 0 for x != y
    rng = sampler.rng(_STREAM["G2"])
    x = np.asarray(sampler.draw(rng, (trials,)), dtype=float)
    y = np.asarray(sampler.draw(rng, (trials,)), dtype=float)
    X = _head(x, y, n)
    v = _evaluate_rows(metric, sampler, X)
    verdicts.append(_verdict(
        "G2", metric, sampler, (v <= tol) | _bad(v, tol=tol), _distinct(sampler, x, y),
        lambda i: (x[i], y[i]), lambda p: (G(repeat_head(p[0], p[1], n)),),
        "G(x,...,x,y) not positive for x != y",
    ))

    # G3: G(x1,...,x1,x2) <= G(x1,...,xn) when x2..xn are not all equal
    rng = sampler.rng(_STREAM["G3"])
    X = _draw_tuples(sampler, rng, trials, n)
    tested = np.zeros(trials, dtype=bool)
    for j in range(2, n):
        tested |= _distinct(sampler, X[:, j], X[:, 1])
    lhs = _evaluate_rows(metric, sampler, _head(X[:, 0], X[:, 1], n))
    rhs = _evaluate_rows(metric, sampler, X)
    verdicts.append(_verdict(
        "G3", metric, sampler, (lhs > rhs + tol) | _bad(lhs, rhs, tol=tol), tested,
        lambda i: X[i], lambda p: (G(repeat_head(p[0], p[1], n)), G(p)),
        "G(x1,...,x1,x2) > G(x1,...,xn)",
    ))

    # G4: symmetry under permutations
    rng = sampler.rng(_STREAM["G4"])
    X = _draw_tuples(sampler, rng, trials, n)
    perm = np.argsort(rng.random((trials, n)), axis=1)
    Y = X[np.arange(trials)[:, None], perm]
    a = _evaluate_rows(metric, sampler, X)
    b = _evaluate_rows(metric, sampler, Y)
    verdicts.append(_verdict(
        "G4", metric, sampler, (np.abs(a - b) > tol) | _bad(a, b, tol=tol), _all(trials),
        lambda i: tuple(X[i]) + tuple(Y[i]),
        lambda p: (G(p[:n]), G(p[n:])),
        "value changes under permutation (witness: tuple then permuted tuple)",
    ))

    # G5: rectangle inequality through an extra point z
    rng = sampler.rng(_STREAM["G5"])
    X = _draw_tuples(sampler, rng, trials, n)
    z = np.asarray(sampler.draw(rng, (trials,)), dtype=float)
    lhs = _evaluate_rows(metric, sampler, X)
    r1 = _evaluate_rows(metric, sampler, _tail(X[:, 0], z, n))
    r2 = _evaluate_rows(metric, sampler, _stack(z, *[X[:, j] for j in range(1, n)]))
    verdicts.append(_verdict(
        "G5", metric, sampler, (lhs > r1 + r2 + tol) | _bad(lhs, r1, r2, tol=tol), _all(trials),
        lambda i: tuple(X[i]) + (z[i],),
        lambda p: (G(p[:n]), G(repeat_tail(p[0], p[n], n)), G((p[n],) + tuple(p[1:n]))),
        "G(x1..xn) > G(x1,z,...,z) + G(z,x2,...,xn) (witness: tuple then z)",
    ))

    return VerificationReport(metric.name, tuple(verdicts), trials, sampler.seed, tol)


def check_symmetry(
    metric: GnMetric, sampler: Sampler, trials: int = 10_000, tol: float = DEFAULT_TOL
) -> VerificationReport:
    """Sample G(x,y,...,y) == G(x,...,x,y)."""
    if trials < 1:
        raise UsageError("trials must be >= 1")
    n = metric.arity
    G = lambda pts: evaluate(metric, pts)
    rng = sampler.rng(_STREAM["SYMMETRY"])
    x = np.asarray(sampler.draw(rng, (trials,)), dtype=float)
    y = np.asarray(sampler.draw(rng, (trials,)), dtype=float)
    a = _evaluate_rows(metric, sampler, _tail(x, y, n))
    b = _evaluate_rows(metric, sampler, _head(x, y, n))
    verdict = _verdict(
        "SYMMETRY", metric, sampler, (np.abs(a - b) > tol) | _bad(a, b, tol=tol), _all(trials),
        lambda i: (x[i], y[i]),
        lambda p: (G(repeat_tail(p[0], p[1], n)), G(repeat_head(p[0], p[1], n))),
        "G(x,y,...,y) != G(x,...,x,y)",
    )
    return VerificationReport(metric.name, (verdict,), trials, sampler.seed, tol)


def check_propositions(
    metric: GnMetric, sampler: Sampler, trials: int = 10_000, tol: float = DEFAULT_TOL
) -> VerificationReport:
    """Sample the consequences of the axioms: the (n-1) bound between the two
    two-point patterns, ball containment against the derived metric, and the
    metric axioms of the derived metric itself."""
    if trials < 1:
        raise UsageError("trials must be >= 1")
    n = metric.arity
    G = lambda pts: evaluate(metric, pts)
    dG = lambda p, q: derived_metric(metric, p, q)
    verdicts = []

    def d_batch(a, b):
        return (_evaluate_rows(metric, sampler, _tail(a, b, n))
                + _evaluate_rows(metric, sampler, _head(a, b, n)))

    rng = sampler.rng(_STREAM["PROP15"])
    x = np.asarray(sampler.draw(rng, (trials,)), dtype=float)
    y = np.asarray(sampler.draw(rng, (trials,)), dtype=float)
    lhs = _evaluate_rows(metric, sampler, _tail(x, y, n))
    rhs = _evaluate_rows(metric, sampler, _tail(y, x, n))
    verdicts.append(_verdict(
        "PROP15", metric, sampler,
        (lhs > (n - 1) * rhs + tol) | _bad(lhs, rhs, tol=tol), _all(trials),
        lambda i: (x[i], y[i]),
        lambda p: (G(repeat_tail(p[0], p[1], n)), G(repeat_tail(p[1], p[0], n))),
        "G(x,y,...,y) > (n-1) G(y,x,...,x)",
    ))

    rng = sampler.rng(_STREAM["BALL_CONTAIN"])
    x = np.asarray(sampler.draw(rng, (trials,)), dtype=float)
    y = np.asarray(sampler.draw(rng, (trials,)), dtype=float)
    same = rng.random(trials) < 0.05
    y[same] = x[same]
    g = _evaluate_rows(metric, sampler, _tail(x, y, n))
    # radii straddle n*G(x,y,...,y) so the antecedent holds in roughly half the trials
    radius = n * g * rng.uniform(0.5, 2.0, size=trials)
    radius = np.where(radius > 0, radius, rng.uniform(1e-3, 1.0, size=trials))
    d = d_batch(x, y)
    inside = g < radius / n
    verdicts.append(_verdict(
        "BALL_CONTAIN", metric, sampler,
        (~(d < radius + tol)) | _bad(g, d, tol=tol), inside,
        lambda i: (x[i], y[i]),
        lambda p: (G(repeat_tail(p[0], p[1], n)), dG(p[0], p[1]), p[2]),
        "G(x,y,...,y) < r/n but d_G(x,y) >= r (witness: x, y, r)",
        extra=lambda i: (radius[i],),
    ))

    rng = sampler.rng(_STREAM["DG_TRIANGLE"])
    x = np.asarray(sampler.draw(rng, (trials,)), dtype=float)
    y = np.asarray(sampler.draw(rng, (trials,)), dtype=float)
    z = np.asarray(sampler.draw(rng, (trials,)), dtype=float)
    dxy, dyx, dyz, dxz = d_batch(x, y), d_batch(y, x), d_batch(y, z), d_batch(x, z)
    failed = (dxz > dxy + dyz + tol) | (np.abs(dxy - dyx) > tol) | _bad(dxy, dyx, dyz, dxz, tol=tol)
    verdicts.append(_verdict(
        "DG_TRIANGLE", metric, sampler, failed, _all(trials),
        lambda i: (x[i], y[i], z[i]),
        lambda p: (dG(p[0], p[1]), dG(p[1], p[0]), dG(p[1], p[2]), dG(p[0], p[2])),
        "derived metric asymmetric or violates the triangle inequality",
    ))

    return VerificationReport(metric.name, tuple(verdicts), trials, sampler.seed, tol)


def check_convergence_equivalence(
    metric: GnMetric, sequence: Sequence[Point], limit: Point, tol: float = DEFAULT_TOL
) -> VerificationReport:
    """Compare the three convergence gauges of ``sequence`` towards ``limit``.

    At the last element, d_G(x_m, x), G(x_m,...,x_m,x) and G(x_m,x,...,x) must
    either all be at most ``tol`` or all exceed it.
    """
    if len(sequence) == 0:
        raise UsageError("sequence must be non-empty")
    n = metric.arity
    last = sequence[-1]
    values = (
        derived_metric(metric, last, limit),
        evaluate(metric, repeat_head(last, limit, n)),
        evaluate(metric, repeat_tail(last, limit, n)),
    )
    small = [v <= tol for v in values]
    if all(small) or not any(small):
        verdict = AxiomVerdict("CONVERGENCE", True, len(sequence), 0)
    else:
        verdict = AxiomVerdict(
            "CONVERGENCE", False, len(sequence), 1, (last, limit), values,
            "convergence gauges disagree at the last element",
        )
    return VerificationReport(metric.name, (verdict,), len(sequence), 0, tol)

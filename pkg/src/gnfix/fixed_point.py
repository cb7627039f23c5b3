"""Picard iteration in generalized n-metric spaces, with empirical certificates.

The same iteration serves both the contraction (Banach-type) setting and the
Suzuki-type setting; the latter only changes which condition is checked on
the map, not how the fixed point is computed.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .constructions import as_raw
from .core import (
    DEFAULT_TOL,
    GnMetric,
    NumericalFailure,
    Point,
    UsageError,
    derived_metric,
    evaluate,
    repeat_tail,
)
from .formatting import fmt_float, fmt_point
from .verifier import Sampler

Mapping = Callable[[Point], Point]

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
INV_SQRT2 = 2.0 ** -0.5

DIVERGENCE_WINDOW = 20
BISECTION_PRECISION = 1e-6

# random-stream keys, disjoint from the verifier's
_MODULUS_STREAM = 101
_SUZUKI_STREAM = 102
_SECOND_START_STREAM = 103


def _check_r(r: float):
    if not 0.0 <= r < 1.0:
        raise UsageError(f"r must lie in [0, 1), got {r}")


def theta(r: float) -> float:
    """1/(1+r): strictly decreasing from [0,1) onto (1/2,1]."""
    _check_r(r)
    return 1.0 / (1.0 + r)


def theta_suzuki(r: float) -> float:
    """Suzuki's three-branch nonincreasing threshold function on [0,1)."""
    _check_r(r)
    if r <= GOLDEN:
        return 1.0
    if r <= INV_SQRT2:
        return (1.0 - r) / (r * r)
    return 1.0 / (1.0 + r)


# -- Picard iteration --------------------------------------------------------


@dataclass(frozen=True)
class IterationStep:
    m: int
    iterate: Point
    residual: float
    a_priori_bound: Optional[float] = None
    a_posteriori_bound: Optional[float] = None


@dataclass
class IterationTrace:
    """Record of y_{m+1} = T(y_m).

    ``steps[m].residual`` is G(y_m, y_{m+1}, ..., y_{m+1}).  When converged,
    ``fixed_point`` is the last computed iterate y_{m+1}.
    """

    steps: list = field(default_factory=list)
    converged: bool = False
    fixed_point: Optional[Point] = None
    status: str = "running"
    modulus: Optional[float] = None

    @property
    def residuals(self) -> np.ndarray:
        return np.array([s.residual for s in self.steps])

    @property
    def iterations(self) -> int:
        return len(self.steps)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "residual", "a_priori_bound", "a_posteriori_bound"])
        for s in self.steps:
            w.writerow([
                s.m,
                fmt_float(s.residual),
                "" if s.a_priori_bound is None else fmt_float(s.a_priori_bound),
                "" if s.a_posteriori_bound is None else fmt_float(s.a_posteriori_bound),
            ])
        return buf.getvalue()

    def summary(self) -> str:
        lines = [f"picard: status={self.status} iterations={self.iterations}"]
        if self.steps:
            lines.append(f"  final residual={fmt_float(self.steps[-1].residual)}")
        if self.converged:
            lines.append(f"  fixed point={fmt_point(self.fixed_point)}")
        return "\n".join(lines)


def _check_finite(y: Point, m: int):
    if not np.all(np.isfinite(as_raw(y))):
        raise NumericalFailure(f"iterate {m} is not finite")


def picard_iterate(
    T: Mapping,
    y0: Point,
    metric: GnMetric,
    tol: float = 1e-9,
    max_iter: int = 1000,
    k: Optional[float] = None,
) -> IterationTrace:
    """Iterate ``T`` from ``y0`` until G(y_m, y_{m+1}, ..., y_{m+1}) <= tol.

    With a contraction modulus ``k`` the trace also carries the error bounds
    k^m/(1-k) G(y_0,y_1,...,y_1) and k/(1-k) G(y_{m-1},y_m,...,y_m) on
    G(y_m, y*, ..., y*).  Running out of iterations, or a residual that grows
    for 20 consecutive steps, ends the run unconverged; a non-finite iterate
    raises NumericalFailure.
    """
    if not tol > 0:
        raise UsageError("tol must be positive")
    if max_iter < 1:
        raise UsageError("max_iter must be >= 1")
    if k is not None and not 0.0 <= k < 1.0:
        raise UsageError(f"contraction modulus must lie in [0, 1), got {k}")

    n = metric.arity
    trace = IterationTrace(modulus=k)
    y = y0
    _check_finite(y, 0)
    first = prev = None
    growing = 0
    for m in range(max_iter):
        y_next = T(y)
        _check_finite(y_next, m + 1)
        res = evaluate(metric, repeat_tail(y, y_next, n))
        if not math.isfinite(res):
            raise NumericalFailure(f"residual at step {m} is not finite")
        if first is None:
            first = res
        prior = post = None
        if k is not None:
            prior = k**m / (1.0 - k) * first
            post = first / (1.0 - k) if prev is None else k / (1.0 - k) * prev
        trace.steps.append(IterationStep(m, y, res, prior, post))

        if res <= tol:
            trace.converged = True
            trace.fixed_point = y_next
            trace.status = "converged"
            return trace
        growing = growing + 1 if prev is not None and res > prev else 0
        if growing >= DIVERGENCE_WINDOW:
            trace.status = "diverging"
            return trace
        prev = res
        y = y_next
    trace.status = "max_iter"
    return trace


# -- contraction modulus -----------------------------------------------------


@dataclass(frozen=True)
class ContractionCertificate:
    k_hat: Optional[float]
    samples_used: int
    trials: int
    max_ratio_witness: Optional[tuple] = None
    witness_values: Optional[tuple] = None

    @property
    def inconclusive(self) -> bool:
        return self.k_hat is None

    @property
    def contractive(self) -> bool:
        return self.k_hat is not None and self.k_hat < 1.0

    @property
    def verdict(self) -> str:
        if self.inconclusive:
            return "inconclusive"
        return "contractive" if self.contractive else "not contractive"

    def summary(self) -> str:
        if self.inconclusive:
            return f"modulus: inconclusive (no nondegenerate tuple in {self.trials} trials)"
        return (
            f"modulus: k_hat={fmt_float(self.k_hat)} ({self.verdict}, empirical) "
            f"from {self.samples_used}/{self.trials} tuples; "
            f"witness={fmt_point(self.max_ratio_witness)}"
        )


def estimate_contraction_modulus(
    T: Mapping, metric: GnMetric, sampler: Sampler, trials: int = 10_000
) -> ContractionCertificate:
    """Largest sampled ratio G(Tx_1,...,Tx_n) / G(x_1,...,x_n)."""
    if trials < 1:
        raise UsageError("trials must be >= 1")
    n = metric.arity
    rng = sampler.rng(_MODULUS_STREAM)
    raw = sampler.draw(rng, (trials, n))
    best = None
    used = 0
    for i in range(trials):
        xs = tuple(sampler.to_point(p) for p in raw[i])
        below = evaluate(metric, xs)
        if not below > 0:
            continue
        used += 1
        above = evaluate(metric, tuple(T(x) for x in xs))
        ratio = above / below
        if best is None or ratio > best[0]:
            best = (ratio, xs, (above, below))
    if best is None:
        return ContractionCertificate(None, 0, trials)
    return ContractionCertificate(best[0], used, trials, best[1], best[2])


# -- Suzuki-type condition ---------------------------------------------------


@dataclass(frozen=True)
class SuzukiViolation:
    u: Point
    v: Point
    threshold: float
    distance: float
    image_distance: float


@dataclass(frozen=True)
class SuzukiReport:
    """Sampled check of: theta(r) G(u,Tu,...,Tu) <= G(u,v,...,v) implies
    G(Tu,Tv,...,Tv) <= r G(u,v,...,v).  ``minimal_feasible_r`` is empirical:
    it is feasible only against the sampled pairs."""

    r: float
    trials: int
    antecedent_hits: int
    violations: tuple
    minimal_feasible_r: Optional[float]
    tolerance: float

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["u", "v", "theta_G_u_Tu", "G_u_v", "G_Tu_Tv"])
        for s in self.violations:
            w.writerow([fmt_point(s.u), fmt_point(s.v), fmt_float(s.threshold),
                        fmt_float(s.distance), fmt_float(s.image_distance)])
        return buf.getvalue()

    def summary(self) -> str:
        lines = [
            f"suzuki: r={fmt_float(self.r)} trials={self.trials} "
            f"antecedent_hits={self.antecedent_hits} violations={len(self.violations)}",
            "  minimal feasible r (empirical): "
            + ("none below 1" if self.minimal_feasible_r is None else fmt_float(self.minimal_feasible_r)),
        ]
        if self.violations:
            s = self.violations[0]
            lines.append(f"  first witness u={fmt_point(s.u)} v={fmt_point(s.v)}")
        return "\n".join(lines)


def _suzuki_failures(r, base, dist, image, tol):
    antecedent = theta(r) * base <= dist + tol
    return antecedent, antecedent & (image > r * dist + tol)


def check_suzuki(
    T: Mapping,
    metric: GnMetric,
    r: float,
    sampler: Sampler,
    trials: int = 10_000,
    tol: float = DEFAULT_TOL,
) -> SuzukiReport:
    _check_r(r)
    if trials < 1:
        raise UsageError("trials must be >= 1")
    n = metric.arity
    rng = sampler.rng(_SUZUKI_STREAM)
    raw = sampler.draw(rng, (trials, 2))
    us, vs = [], []
    base = np.empty(trials)
    dist = np.empty(trials)
    image = np.empty(trials)
    for i in range(trials):
        u, v = sampler.to_point(raw[i, 0]), sampler.to_point(raw[i, 1])
        Tu, Tv = T(u), T(v)
        base[i] = evaluate(metric, repeat_tail(u, Tu, n))
        dist[i] = evaluate(metric, repeat_tail(u, v, n))
        image[i] = evaluate(metric, repeat_tail(Tu, Tv, n))
        us.append(u)
        vs.append(v)

    antecedent, failed = _suzuki_failures(r, base, dist, image, tol)
    violations = tuple(
        SuzukiViolation(us[i], vs[i], theta(r) * base[i], dist[i], image[i])
        for i in np.nonzero(failed)[0]
    )

    def feasible(s):
        return not _suzuki_failures(s, base, dist, image, tol)[1].any()

    hi = 1.0 - BISECTION_PRECISION
    if feasible(0.0):
        minimal = 0.0
    elif not feasible(hi):
        minimal = None
    else:
        lo = 0.0
        while hi - lo > BISECTION_PRECISION:
            mid = 0.5 * (lo + hi)
            if feasible(mid):
                hi = mid
            else:
                lo = mid
        minimal = hi
    return SuzukiReport(r, trials, int(antecedent.sum()), violations, minimal, tol)


# -- combined driver ---------------------------------------------------------


@dataclass(frozen=True)
class UniquenessCheck:
    status: str  # "agree", "disagree" or "skipped"
    second_start: Optional[Point] = None
    second_limit: Optional[Point] = None
    distance: Optional[float] = None
    notice: str = ""

    @property
    def passed(self) -> bool:
        return self.status != "disagree"


@dataclass(frozen=True)
class CertifiedSolution:
    trace: IterationTrace
    certificate: ContractionCertificate
    suzuki: Optional[SuzukiReport]
    uniqueness: UniquenessCheck

    def summary(self) -> str:
        parts = [self.certificate.summary()]
        if self.suzuki is not None:
            parts.append(self.suzuki.summary())
        parts.append(self.trace.summary())
        u = self.uniqueness
        if u.status == "skipped":
            parts.append(f"uniqueness: skipped ({u.notice})")
        else:
            parts.append(
                f"uniqueness: {u.status}; second start {fmt_point(u.second_start)} -> "
                f"{fmt_point(u.second_limit)}, d_G={fmt_float(u.distance)}"
            )
        return "\n".join(parts)


def solve_with_certificate(
    T: Mapping,
    y0: Point,
    metric: GnMetric,
    tol: float = 1e-9,
    max_iter: int = 1000,
    sampler: Optional[Sampler] = None,
    trials: int = 10_000,
    second_start: Optional[Point] = None,
    suzuki_tol: float = DEFAULT_TOL,
) -> CertifiedSolution:
    """Estimate the modulus, check the Suzuki-type condition at r = k_hat, iterate
    with error bounds, then iterate again from a second start to compare limits."""
    if sampler is None:
        raise UsageError("a sampler is required to certify the map")
    cert = estimate_contraction_modulus(T, metric, sampler, trials)
    suzuki = None
    k = None
    if cert.contractive:
        k = cert.k_hat
        suzuki = check_suzuki(T, metric, k, sampler, trials, suzuki_tol)
    trace = picard_iterate(T, y0, metric, tol, max_iter, k)

    if not cert.contractive:
        uniq = UniquenessCheck("skipped", notice=f"map is {cert.verdict}; no uniqueness claim")
    elif not trace.converged:
        uniq = UniquenessCheck("skipped", notice="first run did not converge")
    else:
        if second_start is None:
            second_start = sampler.sample(sampler.rng(_SECOND_START_STREAM))
        other = picard_iterate(T, second_start, metric, tol, max_iter, k)
        if not other.converged:
            uniq = UniquenessCheck("disagree", second_start, None, math.inf,
                                   "second run did not converge")
        else:
            d = derived_metric(metric, trace.fixed_point, other.fixed_point)
            uniq = UniquenessCheck(
                "agree" if d <= 10 * tol else "disagree", second_start, other.fixed_point, d
            )
    return CertifiedSolution(trace, cert, suzuki, uniq)

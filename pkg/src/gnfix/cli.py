"""Command-line front end.

A run is described by a TOML config file; a handful of flags (and matching
``GNFIX_*`` environment variables) override it.  Every run writes a plain
text summary plus command-specific CSV files into the output directory.

Exit status: 0 on a clean pass or convergence, 1 on violations or
non-convergence, 2 on configuration errors, 3 on I/O or numeric failures.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import dp
from .constructions import BASE_METRICS, CONSTRUCTIONS
from .core import NumericalFailure, UsageError
from .fixed_point import check_suzuki, solve_with_certificate
from .mappings import MAPPINGS
from .verifier import check_axioms, check_propositions, uniform_reals, uniform_vectors

COMMANDS = ("check-axioms", "solve-fixed-point", "suzuki-check", "solve-dp")
DEFAULT_TOL = {
    "check-axioms": 1e-12,
    "solve-fixed-point": 1e-9,
    "suzuki-check": 1e-12,
    "solve-dp": 1e-10,
}
ENV_PREFIX = "GNFIX_"

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid config:\n" + "\n".join(f"  - {e}" for e in self.errors))


@dataclass(frozen=True)
class MetricSpec:
    construction: str = "k2_max"
    base: str = "abs"
    n: int = 3
    dim: int = 2
    low: float = -10.0
    high: float = 10.0

    def build(self):
        return CONSTRUCTIONS[self.construction](BASE_METRICS[self.base], self.n)

    def sampler(self, seed: int):
        if self.base == "abs":
            return uniform_reals(self.low, self.high, seed)
        return uniform_vectors(self.dim, self.low, self.high, seed)


@dataclass(frozen=True)
class MappingSpec:
    family: str = "affine"
    params: dict = field(default_factory=dict)
    start: object = 0.0
    second_start: object = None
    max_iter: int = 1000
    r: Optional[float] = None

    def build(self):
        return MAPPINGS[self.family](**self.params)


@dataclass(frozen=True)
class DpSpec:
    problem: Path = Path("problem.toml")
    n: int = 3
    max_iter: int = 10_000
    lipschitz_samples: int = 1000


@dataclass(frozen=True)
class RunConfig:
    command: str
    metric: MetricSpec = MetricSpec()
    mapping: Optional[MappingSpec] = None
    dp: Optional[DpSpec] = None
    tol: float = 1e-12
    trials: int = 10_000
    seed: int = 0
    out: Path = Path("out")


@dataclass
class RunSummary:
    command: str
    exit_code: int
    text: str
    outputs: list
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return self.exit_code == EXIT_OK


# -- parsing -----------------------------------------------------------------


def _number(table, key, kind, errors, where, default):
    if key not in table:
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{where}.{key}: expected a number, got {value!r}")
        return default
    if kind is int and value != int(value):
        errors.append(f"{where}.{key}: expected an integer, got {value!r}")
        return default
    return kind(value)


def parse_config(text: str, base_dir=".", overrides: Optional[dict] = None) -> RunConfig:
    """Validate a TOML run description; ``overrides`` replace top-level keys."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"syntax: {exc}"]) from None
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    base_dir = Path(base_dir)
    errors = []

    command = data.get("command")
    if command not in COMMANDS:
        errors.append(f"command: expected one of {', '.join(COMMANDS)}, got {command!r}")
        raise ConfigError(errors)

    tol = _number(data, "tol", float, errors, "<top>", DEFAULT_TOL[command])
    if not tol > 0:
        errors.append("tol: must be positive")
    trials = _number(data, "trials", int, errors, "<top>", 10_000)
    if trials < 1:
        errors.append("trials: must be >= 1")
    seed = _number(data, "seed", int, errors, "<top>", 0)
    if seed < 0:
        errors.append("seed: must be non-negative")
    out = Path(str(data.get("out", "out")))
    if not out.is_absolute():
        out = base_dir / out

    metric = MetricSpec()
    if command != "solve-dp" or "metric" in data:
        m = data.get("metric")
        if not isinstance(m, dict):
            errors.append("metric: missing [metric] table")
            m = {}
        construction = m.get("construction", "k2_max")
        if construction not in CONSTRUCTIONS:
            errors.append(
                f"metric.construction: unknown {construction!r}; choose from {sorted(CONSTRUCTIONS)}"
            )
        base = m.get("base", "abs")
        if base not in ("abs", "euclidean"):
            errors.append(f"metric.base: unknown {base!r}; choose 'abs' or 'euclidean'")
        elif construction == "rho_max" and base != "abs":
            errors.append("metric.base: rho_max is defined on the reals only (base = 'abs')")
        n = _number(m, "n", int, errors, "metric", 3)
        if n < 3:
            errors.append(f"metric.n: arity must be >= 3, got {n}")
        dim = _number(m, "dim", int, errors, "metric", 2)
        if dim < 1:
            errors.append("metric.dim: must be >= 1")
        low = _number(m, "low", float, errors, "metric", -10.0)
        high = _number(m, "high", float, errors, "metric", 10.0)
        if not low < high:
            errors.append("metric.low must be below metric.high")
        metric = MetricSpec(construction, base, n, dim, low, high)

    mapping = None
    if command in ("solve-fixed-point", "suzuki-check"):
        mp = data.get("mapping")
        if not isinstance(mp, dict):
            errors.append("mapping: missing [mapping] table")
            mp = {}
        family = mp.get("family")
        if family not in MAPPINGS:
            errors.append(f"mapping.family: unknown {family!r}; choose from {sorted(MAPPINGS)}")
        params = mp.get("params", {})
        if not isinstance(params, dict):
            errors.append("mapping.params: expected a table")
            params = {}
        max_iter = _number(mp, "max_iter", int, errors, "mapping", 1000)
        if max_iter < 1:
            errors.append("mapping.max_iter: must be >= 1")
        r = _number(mp, "r", float, errors, "mapping", None)
        if command == "suzuki-check":
            if r is None:
                errors.append("mapping.r: required for suzuki-check")
            elif not 0 <= r < 1:
                errors.append(f"mapping.r: must lie in [0, 1), got {r}")
        mapping = MappingSpec(family, params, mp.get("start", 0.0), mp.get("second_start"), max_iter, r)
        if family in MAPPINGS:
            try:
                mapping.build()
            except (TypeError, ValueError) as exc:
                errors.append(f"mapping.params: {exc}")

    dp_spec = None
    if command == "solve-dp":
        d = data.get("dp")
        if not isinstance(d, dict) or "problem" not in d:
            errors.append("dp.problem: required for solve-dp")
            d = {"problem": ""}
        path = Path(str(d["problem"]))
        if not path.is_absolute():
            path = base_dir / path
        n = _number(d, "n", int, errors, "dp", 3)
        if n < 3:
            errors.append(f"dp.n: arity must be >= 3, got {n}")
        max_iter = _number(d, "max_iter", int, errors, "dp", 10_000)
        samples = _number(d, "lipschitz_samples", int, errors, "dp", 1000)
        dp_spec = DpSpec(path, n, max_iter, samples)
        if not errors:
            try:
                dp.load_problem(path)
            except OSError as exc:
                errors.append(f"dp.problem: cannot read {path}: {exc.strerror}")
            except (dp.IntegrityError, tomllib.TOMLDecodeError) as exc:
                errors.append(f"dp.problem: {exc}")

    if errors:
        raise ConfigError(errors)
    return RunConfig(command, metric, mapping, dp_spec, tol, trials, seed, out)


# -- running -----------------------------------------------------------------


def _point(value, spec: MetricSpec):
    if spec.base == "abs":
        return float(value)
    p = np.array(value, dtype=float).reshape(-1)
    if p.shape != (spec.dim,):
        raise UsageError(f"start point must have {spec.dim} coordinates")
    return p


def _write(out: Path, name: str, text: str, outputs: list):
    path = out / name
    path.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    outputs.append(str(path))


def _header(cfg: RunConfig) -> str:
    return f"command={cfg.command} seed={cfg.seed} trials={cfg.trials} tol={cfg.tol!r}"


def _run_check_axioms(cfg: RunConfig, outputs):
    metric = cfg.metric.build()
    sampler = cfg.metric.sampler(cfg.seed)
    report = check_axioms(metric, sampler, cfg.trials, cfg.tol)
    report = report + check_propositions(metric, sampler, cfg.trials, cfg.tol)
    _write(cfg.out, "report.csv", report.to_csv(), outputs)
    return report.passed, report.summary()


def _run_fixed_point(cfg: RunConfig, outputs):
    spec = cfg.mapping
    metric = cfg.metric.build()
    second = None if spec.second_start is None else _point(spec.second_start, cfg.metric)
    result = solve_with_certificate(
        spec.build(), _point(spec.start, cfg.metric), metric, cfg.tol, spec.max_iter,
        cfg.metric.sampler(cfg.seed), cfg.trials, second,
    )
    _write(cfg.out, "trace.csv", result.trace.to_csv(), outputs)
    ok = (
        result.trace.converged
        and (result.suzuki is None or result.suzuki.passed)
        and result.uniqueness.passed
    )
    return ok, f"map: {spec.family} {spec.params}\n" + result.summary()


def _run_suzuki(cfg: RunConfig, outputs):
    spec = cfg.mapping
    report = check_suzuki(
        spec.build(), cfg.metric.build(), spec.r, cfg.metric.sampler(cfg.seed), cfg.trials, cfg.tol
    )
    _write(cfg.out, "suzuki.csv", report.to_csv(), outputs)
    return report.passed, f"map: {spec.family} {spec.params}\n" + report.summary()


def _run_dp(cfg: RunConfig, outputs):
    spec = cfg.dp
    problem = dp.load_problem(spec.problem)
    head = (
        f"problem: {spec.problem.name} ({len(problem.states)} states, "
        f"{len(problem.decisions)} decisions, {problem.aggregator.describe()}) n={spec.n}"
    )
    try:
        sol = dp.solve(problem, spec.n, cfg.tol, spec.max_iter, None, spec.lipschitz_samples, cfg.seed)
    except dp.LipschitzError as exc:
        return False, head + "\n" + exc.report.summary()
    except dp.ConvergenceError as exc:
        _write(cfg.out, "trace.csv", exc.trace.to_csv(), outputs)
        return False, head + "\n" + str(exc)
    _write(cfg.out, "value.csv", sol.to_csv(), outputs)
    _write(cfg.out, "trace.csv", sol.trace.to_csv(), outputs)
    return True, head + "\n" + sol.summary()


_RUNNERS = {
    "check-axioms": _run_check_axioms,
    "solve-fixed-point": _run_fixed_point,
    "suzuki-check": _run_suzuki,
    "solve-dp": _run_dp,
}


def run(cfg: RunConfig) -> RunSummary:
    start = time.perf_counter()
    cfg.out.mkdir(parents=True, exist_ok=True)
    outputs = []
    ok, body = _RUNNERS[cfg.command](cfg, outputs)
    text = f"{_header(cfg)}\n{body}\nresult: {'PASS' if ok else 'FAIL'}\n"
    _write(cfg.out, "summary.txt", text, outputs)
    return RunSummary(
        cfg.command, EXIT_OK if ok else EXIT_FAIL, text, outputs, time.perf_counter() - start
    )


# -- entry point -------------------------------------------------------------


def _env_overrides(environ) -> dict:
    conv = {"seed": int, "trials": int, "tol": float, "out": str}
    out = {}
    for key, kind in conv.items():
        raw = environ.get(ENV_PREFIX + key.upper())
        if raw is not None:
            try:
                out[key] = kind(raw)
            except ValueError:
                raise ConfigError([f"{ENV_PREFIX}{key.upper()}: cannot parse {raw!r}"]) from None
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gnfix",
        description="Generalized n-metric axiom checks, certified fixed points, and DP solves.",
    )
    p.add_argument("--config", help=f"TOML run description (env {ENV_PREFIX}CONFIG)")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--out", help="output directory")
    return p


def main(argv=None, environ=None) -> int:
    args = build_parser().parse_args(argv)
    environ = os.environ if environ is None else environ
    config_path = args.config or environ.get(ENV_PREFIX + "CONFIG")
    if not config_path:
        print("gnfix: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        text = Path(config_path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"gnfix: cannot read config {config_path}: {exc.strerror}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        overrides = _env_overrides(environ)
        overrides.update(
            {k: v for k, v in vars(args).items() if k != "config" and v is not None}
        )
        if "out" in overrides:
            # flags and env paths are relative to the working directory
            overrides["out"] = str(Path(overrides["out"]).resolve())
        cfg = parse_config(text, Path(config_path).parent, overrides)
    except ConfigError as exc:
        print(f"gnfix: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary = run(cfg)
    except (OSError, NumericalFailure, UsageError) as exc:
        print(f"gnfix: {cfg.command} failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(summary.text, end="")
    print(f"wall time: {summary.wall_time:.3f} s")
    for path in summary.outputs:
        print(f"wrote {path}")
    return summary.exit_code


if __name__ == "__main__":
    sys.exit(main())

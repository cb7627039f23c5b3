import csv
import io
from pathlib import Path

import pytest

from conftest import FIXTURES
from gnfix.cli import ConfigError, RunConfig, main, parse_config, run
from gnfix.dp import brute_force_horizon, load_problem

CHECK_K1 = """
command = "check-axioms"
seed = 42
trials = 10000

[metric]
construction = "k1_sum"
base = "abs"
n = 3
"""

AFFINE = """
command = "solve-fixed-point"
seed = 7
trials = 2000

[metric]
construction = "k2_max"
n = 3

[mapping]
family = "affine"
params = { a = 0.5, b = 1.0 }
start = 0.0
second_start = 100.0
"""

DP = f"""
command = "solve-dp"

[dp]
problem = "{(FIXTURES / 'dp_five_state.toml').as_posix()}"
"""


def _write(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_parse_minimal(tmp_path):
    cfg = parse_config('command = "check-axioms"\n[metric]\nconstruction = "k2_max"\nbase = "abs"\nn = 3\n', tmp_path)
    assert isinstance(cfg, RunConfig)
    assert cfg.metric.construction == "k2_max" and cfg.metric.n == 3
    assert cfg.tol == 1e-12 and cfg.trials == 10_000
    assert cfg.out == tmp_path / "out"


def test_parse_rejects_small_arity():
    with pytest.raises(ConfigError) as info:
        parse_config('command = "check-axioms"\n[metric]\nn = 2\n')
    assert any("arity must be >= 3" in e for e in info.value.errors)


def test_parse_dp_transition_outside_grid(tmp_path):
    bad = (FIXTURES / "dp_five_state.toml").read_text().replace('["s3", "s4", "s4"]', '["s3", "s4", "s9"]')
    _write(tmp_path, bad, "bad.toml")
    with pytest.raises(ConfigError) as info:
        parse_config('command = "solve-dp"\n[dp]\nproblem = "bad.toml"\n', tmp_path)
    assert "not in the state grid" in str(info.value)


@pytest.mark.parametrize(
    "text,needle",
    [
        ('command = "frobnicate"', "command"),
        ('command = "check-axioms"\n[metric]\nconstruction = "k9"', "metric.construction"),
        ('command = "check-axioms"\n[metric]\nconstruction = "rho_max"\nbase = "euclidean"', "reals only"),
        ('command = "check-axioms"\ntol = -1\n[metric]\n', "tol"),
        ('command = "check-axioms"\ntrials = "many"\n[metric]\n', "trials"),
        ('command = "suzuki-check"\n[metric]\n[mapping]\nfamily = "affine"', "mapping.r"),
        ('command = "solve-fixed-point"\n[metric]\n[mapping]\nfamily = "spiral"', "mapping.family"),
        ('command = "solve-fixed-point"\n[metric]\n[mapping]\nfamily = "affine"\nparams = {q = 1}', "mapping.params"),
        ('command = "solve-dp"', "dp.problem"),
        ('command = "solve-dp"\n[dp]\nproblem = "missing.toml"', "cannot read"),
        ("command = [", "syntax"),
    ],
)
def test_parse_errors(tmp_path, text, needle):
    with pytest.raises(ConfigError) as info:
        parse_config(text, tmp_path)
    assert needle in str(info.value)


def test_errors_are_itemized():
    with pytest.raises(ConfigError) as info:
        parse_config('command = "check-axioms"\ntol = 0\n[metric]\nn = 1\nlow = 5\nhigh = 1\n')
    assert len(info.value.errors) == 3


def test_run_check_axioms(tmp_path):
    cfg = parse_config(CHECK_K1, tmp_path)
    summary = run(cfg)
    assert summary.exit_code == 0
    rows = list(csv.DictReader(io.StringIO((tmp_path / "out" / "report.csv").read_text())))
    assert [r["property"] for r in rows] == ["G1", "G2", "G3", "G4", "G5", "PROP15", "BALL_CONTAIN", "DG_TRIANGLE"]
    assert all(r["failures"] == "0" for r in rows)
    assert all(Path(p).exists() for p in summary.outputs)


def test_run_fixed_point(tmp_path):
    summary = run(parse_config(AFFINE, tmp_path))
    assert summary.exit_code == 0
    assert "fixed point=1.9999999990686774" in summary.text
    trace = (tmp_path / "out" / "trace.csv").read_text().splitlines()
    assert trace[0] == "m,residual,a_priori_bound,a_posteriori_bound"
    assert trace[1] == "0,1,2,2"


def test_run_fixed_point_nonconvergence_exit(tmp_path):
    text = AFFINE.replace("a = 0.5, b = 1.0", "a = 1.0, b = 1.0").replace("second_start = 100.0", "max_iter = 30")
    summary = run(parse_config(text, tmp_path))
    assert summary.exit_code == 1
    assert "status=max_iter" in summary.text


def test_run_suzuki_violation_exit(tmp_path):
    text = 'command = "suzuki-check"\ntrials = 100\n[metric]\n[mapping]\nfamily = "identity"\nr = 0.5\n'
    summary = run(parse_config(text, tmp_path))
    assert summary.exit_code == 1
    assert len((tmp_path / "out" / "suzuki.csv").read_text().splitlines()) == 101


def test_run_dp(tmp_path):
    summary = run(parse_config(DP, tmp_path))
    assert summary.exit_code == 0
    rows = list(csv.DictReader(io.StringIO((tmp_path / "out" / "value.csv").read_text())))
    oracle = brute_force_horizon(load_problem(FIXTURES / "dp_five_state.toml"), 200)
    for row in rows:
        assert abs(float(row["value"]) - oracle[row["state"]]) <= 1e-6
    assert [r["argmax_decision"] for r in rows] == ["right", "right", "stay", "left", "left"]


def test_run_dp_sampled_lipschitz(tmp_path):
    src = (FIXTURES / "dp_five_state.toml").read_text()
    bad = src.replace('kind = "affine"\nbeta = 0.8', 'kind = "builtin"\nname = "sin_scaled"\nscale = 0.5')
    _write(tmp_path, bad, "sine.toml")
    summary = run(parse_config('command = "solve-dp"\n[dp]\nproblem = "sine.toml"\n', tmp_path))
    assert summary.exit_code == 0
    assert "sampled" in summary.text


def test_main_flags_and_env(tmp_path, capsys):
    cfg = _write(tmp_path, CHECK_K1)
    out = tmp_path / "flagged"
    env = {"GNFIX_TRIALS": "500", "GNFIX_SEED": "3"}
    assert main(["--config", str(cfg), "--out", str(out), "--seed", "9"], env) == 0
    text = (out / "summary.txt").read_text()
    assert "seed=9 trials=500" in text  # flag beats env, env beats file
    assert "wall time" in capsys.readouterr().out
    assert "wall time" not in text


def test_main_config_from_env(tmp_path):
    cfg = _write(tmp_path, CHECK_K1.replace("10000", "100"))
    assert main([], {"GNFIX_CONFIG": str(cfg)}) == 0


def test_main_exit_codes(tmp_path, capsys):
    assert main([], {}) == 2
    assert main(["--config", str(tmp_path / "nope.toml")], {}) == 3
    bad = _write(tmp_path, 'command = "check-axioms"\n[metric]\nn = 2\n')
    assert main(["--config", str(bad)], {}) == 2
    assert "arity must be >= 3" in capsys.readouterr().err
    assert main(["--config", str(_write(tmp_path, CHECK_K1, "ok.toml"))], {"GNFIX_SEED": "x"}) == 2


@pytest.mark.parametrize("text", [CHECK_K1, AFFINE, DP])
def test_reruns_are_byte_identical(tmp_path, text):
    cfg = _write(tmp_path, text)
    outputs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert main(["--config", str(cfg), "--out", str(out)], {}) == 0
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outputs[0] == outputs[1]

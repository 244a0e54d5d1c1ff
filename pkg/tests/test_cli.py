import csv
import json

import pytest

from jumpflow.cli import main

MINIMAL = {
    "grid": {"cells": [32]},
    "p": 3,
    "renewal": {"inter_arrival": {"kind": "fixed", "d": 1.0}},
    "initial": {"kind": "expression", "expr": "sin(pi * x)"},
    "drift": {"kind": "constant", "field": {"kind": "constant", "value": 0.5}},
    "horizon": 3.5,
}
SMALL_VERIFY = {"trials": 1, "ratio_trials": 1, "decay_trials": 1, "mild_trials": 1, "counting_trials": 3,
                "poisson_paths": 50, "p_values": [3.0], "grids": [[32]]}


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data, indent=2))
    return str(path)


def run_dir(out):
    dirs = [d for d in out.iterdir() if d.is_dir() and not d.name.startswith(".")]
    assert len(dirs) == 1
    return dirs[0]


def test_simulate_writes_artifacts(tmp_path, capsys):
    cfg = write(tmp_path, MINIMAL)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    d = run_dir(tmp_path / "a")
    assert sorted(p.name for p in d.iterdir()) == ["jumps.csv", "manifest.json", "realization.json", "trajectory.csv"]
    realization = json.loads((d / "realization.json").read_text())
    assert realization["times"] == [1.0, 2.0, 3.0]
    rows = list(csv.reader(open(d / "trajectory.csv", newline="")))
    assert rows[0][:2] == ["t", "cell_0"]
    assert len(rows[1][1]) >= 17  # 17 significant digits
    manifest = json.loads((d / "manifest.json").read_text())
    assert manifest["seed"] == 0 and manifest["exit_code"] == 0
    assert set(manifest["artifacts"]) == {"jumps.csv", "realization.json", "trajectory.csv"}


def test_simulate_is_deterministic_and_write_once(tmp_path):
    cfg = write(tmp_path, MINIMAL)
    for out in ("a", "b"):
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / out)]) == 0
    a, b = run_dir(tmp_path / "a"), run_dir(tmp_path / "b")
    assert a.name == b.name
    for name in ("trajectory.csv", "jumps.csv", "realization.json", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    before = (a / "trajectory.csv").stat().st_mtime_ns
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert (a / "trajectory.csv").stat().st_mtime_ns == before


def test_seed_flag_changes_run_id(tmp_path):
    cfg = write(tmp_path, {**MINIMAL, "renewal": {"inter_arrival": {"kind": "exponential", "rate": 2.0}}})
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "1"])
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "2"])
    assert len([d for d in (tmp_path / "a").iterdir()]) == 2


@pytest.mark.parametrize(
    "argv_tail,data,needle",
    [
        (["simulate"], {"p": 2}, "p = 2 is excluded"),
        (["simulate"], {"grid": {"cell": [4]}}, "grid.cell"),
        (["verify", "nonsense"], {}, "unknown suite"),
        (["sweep", "--axis", "p"], {}, "at least one value"),
        (["sweep", "--axis", "tol", "--values", "1"], {}, "unknown sweep axis"),
        (["sweep", "--axis", "p", "--values", "2"], {}, "p = 2 is excluded"),
        (["simulate"], {"mode": "verify"}, "config mode"),
    ],
)
def test_config_errors_exit_2(tmp_path, capsys, argv_tail, data, needle):
    cfg = write(tmp_path, data)
    code = main([argv_tail[0], "--config", cfg, "--out", str(tmp_path / "o"), *argv_tail[1:]])
    assert code == 2
    assert needle in capsys.readouterr().err


def test_bad_flag_exit_2(capsys):
    assert main(["verify", "--jobs", "x"]) == 2


def test_solver_failure_exit_3_with_trace(tmp_path, capsys):
    data = {**MINIMAL, "initial": {"kind": "generator", "name": "random_uniform"},
            "evolve": {"steps_per_unit_time": 1, "max_newton_iters": 1}}
    out = tmp_path / "o"
    assert main(["simulate", "--config", write(tmp_path, data), "--out", str(out)]) == 3
    traces = list(out.glob("*.trace.json"))
    assert len(traces) == 1
    trace = json.loads(traces[0].read_text())
    assert trace["trace"] and "did not converge" in trace["error"]
    assert "trace written" in capsys.readouterr().err


def test_verify_bound_constant_config_reports_equality(tmp_path):
    data = {**MINIMAL, "initial": {"kind": "constant", "value": 1.0}, "verify": SMALL_VERIFY}
    out = tmp_path / "o"
    assert main(["verify", "--suite", "bound", "--config", write(tmp_path, data), "--out", str(out)]) == 0
    d = run_dir(out)
    reports = [json.loads(line) for line in (d / "reports.jsonl").read_text().splitlines()]
    config_case = [r for r in reports if r["check"] == "bound.equality" and r["case"].startswith("config")]
    assert len(config_case) == 1
    assert config_case[0]["measured"] <= 1e-10
    assert (d / "summary.csv").read_text().startswith("check,case,trials")


def test_verify_failure_exit_1(tmp_path, capsys, monkeypatch):
    from jumpflow import verification

    real = verification.run_bound_and_equality_suite

    def broken(cfg):
        reps = real(cfg)
        reps[0].measured, reps[0].passed = 1e9, False
        return reps

    monkeypatch.setitem(verification.SUITE_RUNNERS, "bound", broken)
    data = {"verify": SMALL_VERIFY}
    assert main(["verify", "bound", "--config", write(tmp_path, data), "--out", str(tmp_path / "o")]) == 1
    assert "failing checks" in capsys.readouterr().err


def test_rerun_reproduces_verify(tmp_path):
    cfg = write(tmp_path, {"verify": SMALL_VERIFY})
    assert main(["verify", "weakform", "--config", cfg, "--out", str(tmp_path / "a"), "--timings"]) == 0
    manifest = run_dir(tmp_path / "a") / "manifest.json"
    assert "timings.csv" not in json.loads(manifest.read_text())["artifacts"]
    assert main(["rerun", str(manifest), "--out", str(tmp_path / "b")]) == 0


def test_sweep_p_decay_passes_for_each_value(tmp_path):
    cfg = write(tmp_path, {"verify": SMALL_VERIFY})
    out = tmp_path / "o"
    code = main(["sweep", "--axis", "p", "--values", "1.5", "3", "4", "--suite", "regularity",
                 "--config", cfg, "--out", str(out)])
    assert code == 0
    sweep = next(out.glob("*/sweep.csv"))
    rows = [r for r in csv.DictReader(open(sweep, newline="")) if r["check"] == "regularity.decay"]
    assert [float(r["value"]) for r in rows] == [1.5, 3.0, 4.0]
    assert all(float(r["pass_rate"]) == 1.0 for r in rows)


def test_sweep_steps_semigroup_ratio(tmp_path):
    cfg = write(tmp_path, {"verify": {**SMALL_VERIFY, "ratio_trials": 2}})
    out = tmp_path / "o"
    code = main(["sweep", "--axis", "steps_per_unit_time", "--values", "8", "16", "32", "--suite", "regularity",
                 "--config", cfg, "--out", str(out), "--jobs", "2"])
    assert code == 0
    sweep = next(out.glob("*/sweep.csv"))
    rows = [r for r in csv.DictReader(open(sweep, newline="")) if r["check"] == "regularity.semigroup_defect"]
    assert len(rows) == 3
    assert all(0.3 <= float(r["median_ratio"]) <= 0.7 for r in rows)

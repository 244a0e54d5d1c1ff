"""Acceptance criteria at desk scale, evaluated on one default ``verify all`` run.

Each test records a one-line PASS/FAIL verdict that is echoed in the
terminal summary (see ``conftest.py``).
"""

import json
import time
from collections import Counter

import pytest

from jumpflow.cli import main

from conftest import ACCEPTANCE_LINES

P_VALUES = (1.5, 3.0, 4.0)


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} -- {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.fixture(scope="module")
def verify_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("verify")
    start = time.perf_counter()
    code = main(["verify", "all", "--out", str(out)])
    elapsed = time.perf_counter() - start
    run = next(d for d in out.iterdir() if d.is_dir() and not d.name.startswith("."))
    reports = [json.loads(line) for line in (run / "reports.jsonl").read_text().splitlines()]
    return {"code": code, "elapsed": elapsed, "dir": run, "reports": reports}


def of(verify_run, check):
    return [r for r in verify_run["reports"] if r["check"] == check]


def per_p(reports):
    return Counter(r["case"].split(",")[0] for r in reports)


def test_verify_all_defaults_exit_zero_within_budget(verify_run):
    ok = verify_run["code"] == 0 and verify_run["elapsed"] <= 600
    record(0, "verify all on defaults", ok, f"exit {verify_run['code']} in {verify_run['elapsed']:.0f} s (budget 600 s)")
    assert ok


def test_01_two_trajectory_contraction(verify_run):
    reps = of(verify_run, "contraction.two_trajectory")
    violations = sum(not r["passed"] for r in reps)
    worst_rel = max(r["details"]["slack_relative"] for r in reps)
    counts = per_p(reps)
    ok = violations == 0 and len(reps) >= 150 and min(counts.values()) >= 50 and worst_rel <= 1e-6
    record(1, "two-trajectory contraction", ok,
           f"{violations} violations in {len(reps)} trials {dict(counts)}, max relative slack {worst_rel:.2e}")
    assert ok


def test_02_norm_bound_and_zero_input(verify_run):
    reps = of(verify_run, "bound.norm")
    zero = of(verify_run, "bound.zero_input")
    violations = sum(not r["passed"] for r in reps)
    zero_exact = all(r["measured"] == 0.0 for r in zero)
    ok = violations == 0 and len(reps) >= 150 and min(per_p(reps).values()) >= 50 and zero and zero_exact
    record(2, "norm bound", ok, f"{violations} violations in {len(reps)} trials; zero input exactly 0: {zero_exact}")
    assert ok


def test_03_equality_case(verify_run):
    reps = of(verify_run, "bound.equality")
    worst = max(r["measured"] for r in reps)
    ok = bool(reps) and worst <= 1e-10
    record(3, "equality for constant nonnegative data", ok, f"max relative error {worst:.2e} over {len(reps)} runs")
    assert ok


def test_04_resolvent_accretivity(verify_run):
    reps = of(verify_run, "resolvent.accretivity")
    worst = min(r["bound"] - r["measured"] for r in reps)
    lambdas = {r["details"]["lam"] for r in reps}
    ok = len(reps) >= 150 and min(per_p(reps).values()) >= 50 and worst >= -1e-8
    record(4, "resolvent L1 contraction", ok,
           f"{len(reps)} pairs x 3 lambdas (worst at {sorted(lambdas)}), min margin {worst:.3e}")
    assert ok


def test_05_lq_nonexpansive(verify_run):
    reps = of(verify_run, "regularity.lq_nonexpansive")
    worst = {q: max(r["details"]["excess"][q] for r in reps) for q in ("1", "2", "inf")}
    ok = min(per_p(reps).values()) >= 50 and max(worst.values()) <= 1e-8
    record(5, "Lq non-expansiveness", ok, f"{len(reps)} trials, max excess per q {worst}")
    assert ok


def test_06_generator_decay(verify_run):
    reps = of(verify_run, "regularity.decay")
    worst = max(r["measured"] / r["bound"] for r in reps)
    ok = min(per_p(reps).values()) >= 20 and worst <= 1.05
    record(6, "generator decay 2|v|/(|p-2|t)", ok, f"{len(reps)} fields x 3 times, worst ratio to bound {worst:.3f}")
    assert ok


def test_07_homogeneity_and_resolvent_scaling(verify_run):
    hom = of(verify_run, "regularity.homogeneity")
    scale = of(verify_run, "regularity.resolvent_scaling")
    worst_h = max(r["measured"] for r in hom)
    worst_s = max(r["measured"] / r["bound"] for r in scale)
    ok = worst_h <= 1e-12 and worst_s <= 1.0
    record(7, "homogeneity", ok,
           f"operator relative error {worst_h:.2e}; resolvent scaling at {worst_s:.3f} of 10x tolerance")
    assert ok


def test_08_semigroup_defect_ratio(verify_run):
    reps = of(verify_run, "regularity.semigroup_defect")
    ratios = [r["details"]["ratio"] for r in reps]
    ok = min(per_p(reps).values()) >= 20 and all(0.3 <= x <= 0.7 for x in ratios)
    record(8, "semigroup defect under doubling", ok,
           f"{len(reps)} trials, ratios in [{min(ratios):.3f}, {max(ratios):.3f}]")
    assert ok


def test_09_weak_form_residual(verify_run):
    res = of(verify_run, "weakform.residual")
    ref = of(verify_run, "weakform.refinement")
    violations = sum(not r["passed"] for r in res)
    ratios = [r["details"]["ratio"] for r in ref]
    ok = violations == 0 and min(per_p(res).values()) >= 20 and all(0.2 <= x <= 0.8 for x in ratios)
    record(9, "strong-solution weak form", ok,
           f"{violations} budget violations in {len(res)} instances, refinement ratios "
           f"in [{min(ratios):.3f}, {max(ratios):.3f}]")
    assert ok


def test_10_counting_integral(verify_run):
    reps = of(verify_run, "counting.sum_formula")
    exact = all(r["measured"] == 0.0 for r in reps)
    ok = len(reps) >= 100 and exact
    record(10, "counting integral as atom sum", ok, f"{len(reps)} realizations, exact agreement: {exact}")
    assert ok


def test_11_mild_approximation(verify_run):
    stab = of(verify_run, "mild.stability")
    mono = of(verify_run, "mild.gap_monotone")
    orders = {tuple(r["details"]["orders"]) for r in stab}
    violations = sum(not r["passed"] for r in stab)
    increases = max(r["measured"] for r in mono)
    ok = violations == 0 and increases == 0.0 and orders == {(4, 16, 64, 256)}
    record(11, "mild approximation by quantized data", ok,
           f"{violations} bound violations in {len(stab)} runs, max gap increase {increases}")
    assert ok


def test_12_determinism(verify_run, tmp_path):
    manifest = verify_run["dir"] / "manifest.json"
    verify_ok = main(["rerun", str(manifest), "--out", str(tmp_path / "verify")]) == 0
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps({
        "grid": {"cells": [16, 16]}, "p": 1.5,
        "renewal": {"inter_arrival": {"kind": "exponential", "rate": 2.0}, "marks": [0, 1]},
        "initial": {"kind": "generator", "name": "random_smooth"},
        "drift": {"kind": "per_mark", "table": {"0": {"kind": "generator", "name": "random_smooth"},
                                                "1": {"kind": "expression", "expr": "0.3 * cos(pi * y)"}}},
        "horizon": 2.0, "seed": 42,
    }))
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "sim")]) == 0
    sim_manifest = next((tmp_path / "sim").glob("*/manifest.json"))
    sim_ok = main(["rerun", str(sim_manifest), "--out", str(tmp_path / "sim2")]) == 0
    a, b = sim_manifest.parent, next((tmp_path / "sim2").iterdir())
    same = all((a / f).read_bytes() == (b / f).read_bytes() for f in ("trajectory.csv", "jumps.csv", "realization.json"))
    ok = verify_ok and sim_ok and same
    record(12, "determinism from manifest", ok,
           f"verify rerun identical: {verify_ok}; simulate rerun identical: {sim_ok and same}")
    assert ok

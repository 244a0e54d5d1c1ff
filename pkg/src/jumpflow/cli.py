"""Command line entry point: ``jumpflow simulate | verify | sweep | rerun``.

Exit codes: 0 success, 1 failing checks (or a rerun that did not reproduce
its manifest), 2 configuration error, 3 solver failure (a trace file is
written next to the run directory).

Every run writes into ``<out>/<run_id>`` where ``run_id`` hashes the command,
the resolved configuration and the command arguments.  The directory is
assembled under a temporary name and renamed into place, so a run
directory is either complete or absent and is never rewritten.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import shutil
import statistics
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from importlib import metadata
from pathlib import Path

from . import __version__
from .config import RunConfig, load_config, parse_config
from .config import ConstantDrift, ConstantField
from .errors import ConfigError, SolverError
from .fields import format_float
from .jumps import Trajectory, write_jumps_csv, write_trajectory_csv
from .point_process import sample_renewal
from .verification import (
    CheckReport,
    equality_report,
    failing,
    reports_jsonl,
    resolve_suites,
    run_suites,
    sort_reports,
    summarize,
    summary_csv,
    timings_csv,
)

log = logging.getLogger("jumpflow")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
SWEEP_AXES = ("p", "rate", "grid", "steps_per_unit_time")


class RunFailed(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# run directories ------------------------------------------------------


def versions() -> dict:
    out = {"jumpflow": __version__, "python": ".".join(map(str, sys.version_info[:3]))}
    for pkg in ("numpy", "scipy", "pydantic"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def run_id_for(command: str, cfg: RunConfig, args: dict) -> str:
    text = json.dumps({"command": command, "config": cfg.canonical(), "args": args},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _existing(run_dir: Path) -> dict | None:
    manifest = run_dir / "manifest.json"
    if manifest.exists():
        return json.loads(manifest.read_text())
    return None


def _publish(out: Path, run_id: str, files: dict, manifest: dict) -> Path:
    """Write ``files`` (name -> text) plus the manifest into ``out/run_id`` atomically."""
    out.mkdir(parents=True, exist_ok=True)
    final = out / run_id
    tmp = Path(tempfile.mkdtemp(prefix=f".{run_id}-", dir=out))
    try:
        for name, text in files.items():
            with open(tmp / name, "w", newline="") as fh:
                fh.write(text)
        manifest = dict(manifest)
        manifest["artifacts"] = {
            name: _sha256(tmp / name) for name in sorted(files) if name not in manifest.get("volatile", [])
        }
        (tmp / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
        try:
            os.rename(tmp, final)
        except OSError:
            if _existing(final) is None:
                raise
            log.info("run %s was completed concurrently; keeping the existing directory", run_id)
    finally:
        if tmp.exists():
            shutil.rmtree(tmp, ignore_errors=True)
    return final


def _manifest(command: str, cfg: RunConfig, args: dict, run_id: str, exit_code: int, **extra) -> dict:
    return {
        "command": command,
        "args": args,
        "config": cfg.canonical(),
        "config_hash": cfg.content_hash(),
        "seed": cfg.seed,
        "run_id": run_id,
        "exit_code": exit_code,
        "versions": versions(),
        **extra,
    }


def _write_trace(out: Path, run_id: str, exc: SolverError) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{run_id}.trace.json"
    path.write_text(json.dumps({
        "error": str(exc),
        "residual": exc.residual,
        "trace": [list(t) for t in (exc.trace or [])],
    }, indent=2, default=float) + "\n")
    return path


# commands -------------------------------------------------------------


def _read_bytes_text(path: Path) -> str:
    with open(path, newline="") as fh:
        return fh.read()


def cmd_simulate(cfg: RunConfig, out: Path) -> tuple[int, Path]:
    args = {}
    run_id = run_id_for("simulate", cfg, args)
    prior = _existing(out / run_id)
    if prior is not None:
        log.info("run %s already exists; not rewriting", run_id)
        return prior["exit_code"], out / run_id
    op = cfg.build_operator()
    grid = op.grid
    r = sample_renewal(cfg.build_renewal(), cfg.horizon)
    x = cfg.build_initial(grid)
    drift = cfg.build_drift(grid)
    ev = cfg.build_evolve()
    try:
        traj = Trajectory.build(x, drift, r, op, ev)
        times = sorted(set(cfg.query_times()) | set(r.times))
        with tempfile.TemporaryDirectory() as d:
            write_trajectory_csv(Path(d) / "t.csv", traj, times)
            write_jumps_csv(Path(d) / "j.csv", traj.seq)
            trajectory_text = _read_bytes_text(Path(d) / "t.csv")
            jumps_text = _read_bytes_text(Path(d) / "j.csv")
    except SolverError as exc:
        path = _write_trace(out, run_id, exc)
        raise RunFailed(EXIT_SOLVER, f"solver failure: {exc}\ntrace written to {path}") from exc
    files = {
        "realization.json": r.to_json() + "\n",
        "trajectory.csv": trajectory_text,
        "jumps.csv": jumps_text,
    }
    manifest = _manifest("simulate", cfg, args, run_id, EXIT_OK, atoms=len(r))
    return EXIT_OK, _publish(out, run_id, files, manifest)


def _config_equality(cfg: RunConfig):
    """Extra equality-case report when the configured data are nonnegative constants."""
    if not (isinstance(cfg.initial, ConstantField) and isinstance(cfg.drift, ConstantDrift)
            and isinstance(cfg.drift.field, ConstantField)):
        return None
    phi1, phi2 = cfg.initial.value, cfg.drift.field.value
    if phi1 < 0 or phi2 < 0:
        return None
    r = sample_renewal(cfg.build_renewal(), cfg.horizon)
    return equality_report(cfg.build_operator(), phi1, phi2, r, cfg.build_evolve(),
                           case=f"config,p={cfg.p:g}", seed=cfg.seed)


def cmd_verify(cfg: RunConfig, suites: list[str], out: Path, jobs: int = 1,
               timings: bool = False) -> tuple[int, Path]:
    suites = resolve_suites(suites)
    args = {"suites": suites, "timings": timings}
    run_id = run_id_for("verify", cfg, args)
    prior = _existing(out / run_id)
    if prior is not None:
        log.info("run %s already exists; not rewriting", run_id)
        return prior["exit_code"], out / run_id
    suite_cfg = cfg.build_suite()
    log.info("running suites %s", ", ".join(suites))
    reports = run_suites(suite_cfg, suites, jobs=jobs)
    if "bound" in suites:
        extra = _config_equality(cfg)
        if extra is not None:
            reports = sort_reports([*reports, extra])
    bad = failing(reports)
    code = EXIT_FAIL if bad else EXIT_OK
    files = {"reports.jsonl": reports_jsonl(reports), "summary.csv": summary_csv(summarize(reports))}
    volatile = []
    if timings:
        files["timings.csv"] = timings_csv(reports)
        volatile.append("timings.csv")
    manifest = _manifest("verify", cfg, args, run_id, code, checks=len(reports),
                         failing=[f"{r.name} seed={r.seed}" for r in bad], volatile=volatile)
    run_dir = _publish(out, run_id, files, manifest)
    return code, run_dir


def _sweep_value(axis: str, raw: str):
    try:
        if axis in ("p", "rate"):
            return float(raw)
        if axis == "steps_per_unit_time":
            return int(raw)
        cells = [int(c) for c in str(raw).lower().split("x")]
        return cells
    except ValueError:
        raise ConfigError(f"sweep value {raw!r} is not valid for axis {axis}") from None


def _with_axis(cfg: RunConfig, axis: str, value) -> RunConfig:
    data = cfg.canonical()
    if axis == "p":
        data["p"] = value
        data["verify"]["p_values"] = [value]
    elif axis == "rate":
        data["verify"]["rate"] = value
    elif axis == "grid":
        data["grid"]["cells"] = value
        data["verify"]["grids"] = [value]
    else:
        data["evolve"]["steps_per_unit_time"] = value
        # the semigroup-defect probe must stay in its asymptotic regime and at
        # least as fine as the evolve resolution
        data["verify"]["defect_steps"] = max(data["verify"]["defect_steps"], 4 * value)
    return parse_config(json.dumps(data), f"sweep {axis}={value}")


def _sweep_point(payload):
    text, suites, out, timings = payload
    cfg = parse_config(text, "<sweep>")
    return cmd_verify(cfg, suites, Path(out), jobs=1, timings=timings)


def cmd_sweep(cfg: RunConfig, axis: str, values: list[str], suites: list[str], out: Path,
              jobs: int = 1) -> tuple[int, Path]:
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")
    if not values:
        raise ConfigError("sweep needs at least one value")
    suites = resolve_suites(suites)
    parsed = [_sweep_value(axis, v) for v in values]
    points = [_with_axis(cfg, axis, v) for v in parsed]
    args = {"axis": axis, "values": [json.dumps(v) for v in parsed], "suites": suites}
    run_id = run_id_for("sweep", cfg, args)
    prior = _existing(out / run_id)
    if prior is not None:
        log.info("sweep %s already exists; not rewriting", run_id)
        return prior["exit_code"], out / run_id
    payloads = [(json.dumps(p.canonical()), suites, str(out), False) for p in points]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, payloads))
    else:
        results = [_sweep_point(pl) for pl in payloads]

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["axis", "value", "check", "trials", "worst_margin", "worst_measured", "pass_rate",
                "median_ratio", "run_id"])
    code = EXIT_OK
    for value, (point_code, run_dir) in zip(parsed, results):
        code = max(code, point_code)
        reports = [json.loads(line) for line in (run_dir / "reports.jsonl").read_text().splitlines()]
        ratios: dict = {}
        for rep in reports:
            if "ratio" in rep["details"]:
                ratios.setdefault(rep["check"], []).append(rep["details"]["ratio"])
        rows = summarize([CheckReport(**rep) for rep in reports], by_case=False)
        for row in rows:
            med = ratios.get(row.check)
            w.writerow([axis, "x".join(map(str, value)) if isinstance(value, list) else format_float(value),
                        row.check, row.trials, format_float(row.worst_margin), format_float(row.worst_measured),
                        format_float(row.pass_rate), format_float(statistics.median(med)) if med else "",
                        run_dir.name])
    manifest = _manifest("sweep", cfg, args, run_id, code, points=[r[1].name for r in results])
    return code, _publish(out, run_id, {"sweep.csv": buf.getvalue()}, manifest)


def cmd_rerun(manifest_path: Path, out: Path, jobs: int = 1) -> tuple[int, Path]:
    """Re-execute a manifest into ``out`` and compare every artifact hash."""
    try:
        manifest = json.loads(Path(manifest_path).read_text())
        cfg = parse_config(json.dumps(manifest["config"]), str(manifest_path))
        command, args = manifest["command"], manifest["args"]
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read manifest {manifest_path}: {exc}") from None
    if (out / manifest["run_id"]).resolve() == Path(manifest_path).resolve().parent:
        raise ConfigError("rerun needs an --out directory different from the original run")
    if command == "simulate":
        _, run_dir = cmd_simulate(cfg, out)
    elif command == "verify":
        _, run_dir = cmd_verify(cfg, args["suites"], out, jobs, args.get("timings", False))
    elif command == "sweep":
        values = [_raw(v) for v in args["values"]]
        _, run_dir = cmd_sweep(cfg, args["axis"], values, args["suites"], out, jobs)
    else:
        raise ConfigError(f"manifest has unknown command {command!r}")
    fresh = json.loads((run_dir / "manifest.json").read_text())
    diff = sorted(k for k in set(manifest["artifacts"]) | set(fresh["artifacts"])
                  if manifest["artifacts"].get(k) != fresh["artifacts"].get(k))
    if diff:
        raise RunFailed(EXIT_FAIL, f"rerun differs from manifest in: {', '.join(diff)}")
    print(f"reproduced {len(fresh['artifacts'])} artifacts byte-identically in {run_dir}")
    return EXIT_OK, run_dir


def _raw(v: str) -> str:
    value = json.loads(v)
    return "x".join(map(str, value)) if isinstance(value, list) else str(value)


# argument parsing ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jumpflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration (defaults apply if omitted)")
    common.add_argument("--out", type=Path, help="output root (default: the config's 'output')")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", parents=[common], help="simulate one trajectory")

    verify = sub.add_parser("verify", parents=[common], help="run property suites")
    verify.add_argument("suites", nargs="*", help="contraction, bound, regularity, weakform or all")
    verify.add_argument("--suite", action="append", default=[], dest="suite_flags")
    verify.add_argument("--timings", action="store_true", help="also write per-check runtimes")

    sweep = sub.add_parser("sweep", parents=[common], help="run verify over a parameter axis")
    sweep.add_argument("--axis", required=True, help=", ".join(SWEEP_AXES))
    sweep.add_argument("--values", nargs="*", default=[], help="values, e.g. 8 16 32 or 64 16x16")
    sweep.add_argument("--suite", action="append", default=[], dest="suite_flags")

    rerun = sub.add_parser("rerun", help="re-execute a manifest and compare artifacts")
    rerun.add_argument("manifest", type=Path)
    rerun.add_argument("--out", type=Path, required=True)
    rerun.add_argument("--jobs", type=int, default=1)
    rerun.add_argument("-v", "--verbose", action="store_true")
    return parser


def _load(ns) -> RunConfig:
    cfg = load_config(ns.config) if ns.config else RunConfig()
    if ns.seed is not None:
        if not 0 <= ns.seed < 2 ** 64:
            raise ConfigError(f"--seed must be a 64-bit unsigned integer, got {ns.seed}")
        cfg = parse_config(json.dumps({**cfg.canonical(), "seed": ns.seed}), "--seed")
    if cfg.mode is not None and cfg.mode != ns.command:
        raise ConfigError(f"config mode is {cfg.mode!r} but the command is {ns.command!r}")
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if ns.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        if ns.command == "rerun":
            code, run_dir = cmd_rerun(ns.manifest, ns.out, ns.jobs)
        else:
            cfg = _load(ns)
            out = ns.out or Path(cfg.output)
            if ns.command == "simulate":
                code, run_dir = cmd_simulate(cfg, out)
            elif ns.command == "verify":
                code, run_dir = cmd_verify(cfg, [*ns.suites, *ns.suite_flags], out, ns.jobs, ns.timings)
            else:
                code, run_dir = cmd_sweep(cfg, ns.axis, ns.values, ns.suite_flags, out, ns.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RunFailed as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if code == EXIT_FAIL and ns.command != "rerun":
        manifest = json.loads((run_dir / "manifest.json").read_text())
        print("failing checks:", file=sys.stderr)
        for name in manifest.get("failing", []):
            print(f"  {name}", file=sys.stderr)
    print(run_dir)
    return code


if __name__ == "__main__":
    sys.exit(main())

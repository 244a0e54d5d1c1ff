"""Property suites: every check compares a measured number with a bound.

A :class:`CheckReport` passes iff ``measured <= bound + slack``.  Slack is
never a guessed constant.  It is the sum of itemised budgets (resolvent
residuals propagated through the L^1 contraction, quadrature bounds,
floating-point rounding, or a documented relative allowance), and each item
is listed in ``details["slack_items"]``.

Two-sided ratio checks are encoded as ``measured = |ratio - centre|`` with
``bound = half-width``, so ``[0.3, 0.7]`` becomes ``|ratio - 0.5| <= 0.2``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from . import fields
from .errors import ConfigError, JumpflowError, SolverError
from .grid import GridDomain, StateField, distance1
from .jumps import (
    DriftFunction,
    Trajectory,
    mild_approximation_run,
    query_times,
    weak_form_profile,
)
from .plaplacian import PLaplacian, WeightField, check_exponent
from .point_process import (
    InterArrival,
    MarkSpace,
    MarkedPointRealization,
    RenewalSpec,
    atoms_in_window,
    counting_integral,
    sample_renewal,
)
from .quantizer import DenseQuantizer
from .semigroup import (
    EvolveConfig,
    difference_quotient_gap,
    evolve,
    evolve_path,
    generator_apply,
    n_steps,
    same_step_count_times,
)

EPS = float(np.finfo(float).eps)


# ---------------------------------------------------------------------------
# reports


@dataclass
class CheckReport:
    check: str
    case: str
    anchor: str
    measured: float
    bound: float
    slack: float
    passed: bool
    seed: int
    runtime: float = 0.0
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.anchor:
            raise ValueError(f"check {self.check} has no anchor")

    @property
    def name(self) -> str:
        return f"{self.check}[{self.case}]"

    @property
    def margin(self) -> float:
        """``bound + slack - measured``; non-negative iff the check passes."""
        return self.bound + self.slack - self.measured

    def consistent(self) -> bool:
        return self.passed == (self.measured <= self.bound + self.slack)

    def to_json(self) -> str:
        """One JSON line without the runtime field (runtimes are not reproducible)."""
        d = asdict(self)
        d.pop("runtime")
        return json.dumps(_jsonable(d), sort_keys=True, allow_nan=False)

    @classmethod
    def from_json(cls, line: str) -> "CheckReport":
        return cls(**json.loads(line))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def make_report(check: str, case: str, measured: float, bound: float, slack_items: dict | None = None,
                seed: int = 0, runtime: float = 0.0, **details) -> CheckReport:
    slack_items = {k: float(v) for k, v in (slack_items or {}).items()}
    slack = math.fsum(slack_items.values())
    measured = float(measured)
    bound = float(bound)
    details["slack_items"] = slack_items
    return CheckReport(
        check=check,
        case=case,
        anchor=REGISTRY[check].anchor,
        measured=measured,
        bound=bound,
        slack=slack,
        passed=bool(measured <= bound + slack),
        seed=int(seed),
        runtime=float(runtime),
        details=details,
    )


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class CheckSpec:
    name: str
    suite: str
    anchor: str
    conclusion: str


_SPECS = [
    # contraction suite
    CheckSpec("contraction.two_trajectory", "contraction", "L1 contraction of two solutions driven by one realization", "two_trajectory_contraction"),
    CheckSpec("contraction.identical_inputs", "contraction", "degenerate pair: identical inputs", "two_trajectory_contraction"),
    CheckSpec("contraction.translation", "contraction", "constants translate the flow", "two_trajectory_contraction"),
    CheckSpec("resolvent.accretivity", "contraction", "m-accretivity: resolvent is an L1 contraction", "resolvent_accretivity"),
    CheckSpec("resolvent.order_preservation", "contraction", "complete accretivity: resolvent preserves order", "resolvent_accretivity"),
    CheckSpec("evolve.contraction", "contraction", "semigroup contractivity in L1", "resolvent_accretivity"),
    CheckSpec("uniqueness.bitwise", "contraction", "at most one mild solution: identical inputs", "uniqueness"),
    CheckSpec("uniqueness.tolerance", "contraction", "at most one mild solution: solver tolerances", "uniqueness"),
    CheckSpec("mild.stability", "contraction", "mild solution as limit of quantized strong solutions", "mild_solution"),
    CheckSpec("mild.gap_monotone", "contraction", "quantizer gaps decrease along the dense prefix", "dense_quantizer"),
    CheckSpec("mild.fixed_points", "contraction", "quantizer fixes members of the dense prefix", "dense_quantizer"),
    # bound suite
    CheckSpec("bound.norm", "bound", "norm bound when (0,0) lies in the operator", "norm_bound"),
    CheckSpec("bound.zero_input", "bound", "zero data give the zero solution", "norm_bound"),
    CheckSpec("bound.equality", "bound", "equality for nonnegative constant data", "equality_case"),
    # regularity suite
    CheckSpec("regularity.decay", "regularity", "domain invariance and generator decay 2|v|/(|p-2| t)", "generator_decay"),
    CheckSpec("regularity.lq_nonexpansive", "regularity", "Lq non-expansiveness of the semigroup", "lq_nonexpansive"),
    CheckSpec("regularity.lipschitz", "regularity", "local Lipschitz continuity of the flow in time", "flow_lipschitz"),
    CheckSpec("regularity.continuity", "regularity", "continuity of the flow in time", "flow_lipschitz"),
    CheckSpec("regularity.semigroup_defect", "regularity", "semigroup property T(s+t) = T(t)T(s)", "semigroup_law"),
    CheckSpec("regularity.homogeneity", "regularity", "operator positively homogeneous of degree p-1", "homogeneity"),
    CheckSpec("regularity.resolvent_scaling", "regularity", "resolvent scaling from homogeneity", "homogeneity"),
    CheckSpec("regularity.mean_conservation", "regularity", "constant test function: mass conservation", "operator_definition"),
    CheckSpec("regularity.energy_dissipation", "regularity", "energy non-increasing along the flow", "operator_definition"),
    CheckSpec("generator.weak_pairing", "regularity", "operator defined through its weak form", "operator_definition"),
    CheckSpec("generator.consistency", "regularity", "infinitesimal generator equals the operator", "generator_identification"),
    # weak-form suite
    CheckSpec("weakform.residual", "weakform", "strong solution: weak form with jumps", "strong_solution"),
    CheckSpec("weakform.refinement", "weakform", "strong solution: quadrature refinement", "strong_solution"),
    CheckSpec("weakform.mass_balance", "weakform", "strong solution tested against constants", "strong_solution"),
    CheckSpec("weakform.integral_identity", "weakform", "integral identity for the generator along the flow", "integral_identity"),
    CheckSpec("weakform.envelope", "weakform", "integrability of <Psi, A T(.) v> near zero", "weak_integrability"),
    CheckSpec("process.cadlag", "weakform", "process generated by (x, eta): right limits and jumps", "generated_process"),
    CheckSpec("counting.sum_formula", "weakform", "counting-measure integral as a sum over atoms", "counting_integral"),
    CheckSpec("renewal.hitting_times", "weakform", "hitting times strictly increasing and positive", "hitting_times"),
    CheckSpec("renewal.poisson_mean", "weakform", "renewal construction from positive inter-arrivals", "renewal_construction"),
]

REGISTRY: dict[str, CheckSpec] = {s.name: s for s in _SPECS}
SUITES = ("contraction", "bound", "regularity", "weakform")

#: Every conclusion the suite must cover; :func:`audit_registry` enforces it.
REQUIRED_CONCLUSIONS = (
    "hitting_times",
    "counting_integral",
    "strong_solution",
    "two_trajectory_contraction",
    "uniqueness",
    "norm_bound",
    "flow_lipschitz",
    "integral_identity",
    "generated_process",
    "dense_quantizer",
    "mild_solution",
    "renewal_construction",
    "operator_definition",
    "lq_nonexpansive",
    "generator_identification",
    "generator_decay",
    "weak_integrability",
    "equality_case",
    "resolvent_accretivity",
    "homogeneity",
    "semigroup_law",
)


class AuditError(JumpflowError):
    pass


def audit_registry(registry: dict | None = None, reports: Iterable[CheckReport] | None = None,
                   suites: Iterable[str] = SUITES) -> None:
    """Raise :class:`AuditError` if a conclusion has no check, or a run skipped a registered check."""
    registry = REGISTRY if registry is None else registry
    covered = {s.conclusion for s in registry.values()}
    missing = [c for c in REQUIRED_CONCLUSIONS if c not in covered]
    if missing:
        raise AuditError(f"no check registered for: {', '.join(missing)}")
    if reports is not None:
        suites = set(suites)
        seen = {r.check for r in reports}
        skipped = sorted(n for n, s in registry.items() if s.suite in suites and n not in seen)
        if skipped:
            raise AuditError(f"registered checks produced no report: {', '.join(skipped)}")


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class SuiteConfig:
    trials: int = 50
    grids: tuple = ((64,), (16, 16))
    p_values: tuple = (1.5, 3.0, 4.0)
    seed: int = 0
    weight: str = "bump"
    horizon: float = 2.0
    rate: float = 2.0
    evolve: EvolveConfig = EvolveConfig()
    lambdas: tuple = (0.01, 0.1, 1.0)
    ratio_trials: int = 20
    decay_trials: int = 20
    decay_times: tuple = (0.1, 0.5, 1.0)
    decay_slack: float = 0.05
    defect_steps: int = 64
    mild_trials: int = 4
    quantizer_orders: tuple = (4, 16, 64, 256)
    quantizer_amplitude: float = 2.0
    counting_trials: int = 100
    poisson_paths: int = 10_000
    margin_abs: float = 1e-8
    equality_rel: float = 1e-10
    homogeneity_rel: float = 1e-12

    def __post_init__(self):
        if self.trials < 1 or self.ratio_trials < 1 or self.decay_trials < 1 or self.mild_trials < 1:
            raise ConfigError("trial counts must be >= 1")
        if not self.p_values:
            raise ConfigError("at least one p value is required")
        for p in self.p_values:
            check_exponent(p)
        if not self.grids:
            raise ConfigError("at least one grid is required")
        for g in self.grids:
            GridDomain.unit(*g)
        if not (self.horizon > 0 and self.rate > 0):
            raise ConfigError("horizon and rate must be positive")
        if any(b <= a for a, b in zip(self.quantizer_orders, self.quantizer_orders[1:])):
            raise ConfigError("quantizer orders must be increasing")
        if self.weight not in ("constant", "checkerboard", "bump"):
            raise ConfigError(f"unknown weight {self.weight!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grids"] = [list(g) for g in self.grids]
        return _jsonable(d)


def trial_seed(base: int, check: str, *key) -> int:
    """Deterministic 64-bit seed for one trial of one check."""
    text = ":".join([str(int(base)), check, *map(str, key)])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def case_label(p: float, grid: GridDomain) -> str:
    return f"p={p:g},grid={'x'.join(map(str, grid.shape))}"


_OP_CACHE: dict = {}


def make_operator(cfg: SuiteConfig, p: float, shape: tuple) -> PLaplacian:
    key = (cfg.weight, float(p), tuple(shape))
    op = _OP_CACHE.get(key)
    if op is None:
        grid = GridDomain.unit(*shape)
        cells = {
            "constant": lambda: fields.constant(grid, 1.0),
            "checkerboard": lambda: fields.checkerboard(grid, 1.0, 2.0),
            "bump": lambda: fields.bump(grid, 1.0, 1.0, 0.25),
        }[cfg.weight]()
        op = _OP_CACHE[key] = PLaplacian.build(grid, p, WeightField.from_cells(grid, cells))
    return op


def _cases(cfg: SuiteConfig, n: int):
    """``n`` trials per p value, alternating over the configured grids."""
    for p in cfg.p_values:
        for k in range(n):
            yield p, cfg.grids[k % len(cfg.grids)], k


def _field(grid, values) -> StateField:
    return StateField(grid, values)


def _random_drift(grid, rng, marks=(0, 1), amplitude=0.5) -> DriftFunction:
    return DriftFunction.per_mark(
        {z: _field(grid, fields.random_smooth(grid, rng, amplitude=amplitude)) for z in marks}
    )


def _realization(cfg: SuiteConfig, seed: int, marks=(0, 1)) -> MarkedPointRealization:
    spec = RenewalSpec(
        InterArrival.exponential(cfg.rate), MarkSpace(marks), tuple([1.0 / len(marks)] * len(marks)), seed
    )
    return sample_renewal(spec, cfg.horizon)


def _timed(fn: Callable[[], CheckReport]) -> CheckReport:
    start = time.perf_counter()
    rep = fn()
    rep.runtime = time.perf_counter() - start
    return rep


def _failed(check: str, case: str, seed: int, exc: Exception) -> CheckReport:
    """A trial whose solver failed counts as a failed check carrying the trace."""
    trace = getattr(exc, "trace", [])
    return make_report(check, case, math.inf, 0.0, seed=seed, error=str(exc), trace=[list(t) for t in trace])


def _run_trial(check: str, case: str, seed: int, body: Callable[[], CheckReport]) -> CheckReport:
    try:
        return _timed(body)
    except SolverError as exc:
        return _failed(check, case, seed, exc)


# ---------------------------------------------------------------------------
# contraction suite


def run_contraction_suite(cfg: SuiteConfig) -> list[CheckReport]:
    reports = []
    ev = cfg.evolve
    for p, shape, k in _cases(cfg, cfg.trials):
        op = make_operator(cfg, p, shape)
        grid = op.grid
        case = case_label(p, grid)
        seed = trial_seed(cfg.seed, "contraction.two_trajectory", p, shape, k)

        def two_trajectory():
            rng = _rng(seed)
            r = _realization(cfg, seed)
            x1 = _field(grid, fields.random_smooth(grid, rng))
            x2 = _field(grid, fields.random_smooth(grid, rng))
            d1, d2 = _random_drift(grid, rng), _random_drift(grid, rng)
            t1 = Trajectory.build(x1, d1, r, op, ev)
            t2 = Trajectory.build(x2, d2, r, op, ev)
            worst = None
            for t in query_times(r, cfg.horizon / 4):
                s1, b1 = t1.with_budget(t)
                s2, b2 = t2.with_budget(t)
                lhs = distance1(s1, s2)
                rhs = distance1(x1, x2) + counting_integral(lambda tau, z: distance1(d1(tau, z), d2(tau, z)), r, t)
                items = {"solver": b1 + b2, "rounding": 64 * EPS * (s1.norm1() + s2.norm1() + rhs)}
                margin = rhs + sum(items.values()) - lhs
                if worst is None or margin < worst[0]:
                    worst = (margin, t, lhs, rhs, items)
            _, t, lhs, rhs, items = worst
            return make_report("contraction.two_trajectory", case, lhs, rhs, items, seed,
                               time=t, atoms=len(r), slack_relative=sum(items.values()) / max(rhs, 1e-300))

        reports.append(_run_trial("contraction.two_trajectory", case, seed, two_trajectory))

    for p in cfg.p_values:
        for shape in cfg.grids:
            op = make_operator(cfg, p, shape)
            grid = op.grid
            case = case_label(p, grid)
            seed = trial_seed(cfg.seed, "contraction.degenerate", p, shape)

            def identical():
                rng = _rng(seed)
                r = _realization(cfg, seed)
                x = _field(grid, fields.random_smooth(grid, rng))
                d = _random_drift(grid, rng)
                t1 = Trajectory.build(x, d, r, op, ev)
                t2 = Trajectory.build(x, d, r, op, ev)
                lhs = max(distance1(t1(t), t2(t)) for t in query_times(r, cfg.horizon / 4))
                return make_report("contraction.identical_inputs", case, lhs, 0.0, {}, seed)

            def translation():
                rng = _rng(seed + 1)
                r = _realization(cfg, seed + 1)
                x = _field(grid, fields.random_smooth(grid, rng))
                d = _random_drift(grid, rng)
                c = float(rng.uniform(-1, 1))
                t1 = Trajectory.build(x, d, r, op, ev)
                t2 = Trajectory.build(x + c, d, r, op, ev)
                worst = (0.0, 0.0)
                for t in query_times(r, cfg.horizon / 4):
                    s1, b1 = t1.with_budget(t)
                    s2, b2 = t2.with_budget(t)
                    dev = abs(distance1(s1, s2) - abs(c) * grid.measure)
                    if dev >= worst[0]:
                        worst = (dev, b1 + b2 + 64 * EPS * (s1.norm1() + s2.norm1()))
                return make_report("contraction.translation", case, worst[0], 0.0,
                                   {"solver_and_rounding": worst[1]}, seed + 1, shift=c)

            def uniqueness():
                rng = _rng(seed + 2)
                r = _realization(cfg, seed + 2)
                x = _field(grid, fields.random_smooth(grid, rng))
                d = _random_drift(grid, rng)
                loose = EvolveConfig(ev.steps_per_unit_time, 1e-8, ev.max_newton_iters)
                a = Trajectory.build(x, d, r, op, ev)
                b = Trajectory.build(x, d, r, op, ev)
                c = Trajectory.build(x, d, r, op, loose)
                bitwise = 0.0
                worst = (0.0, 0.0)
                for t in query_times(r, cfg.horizon / 4):
                    sa, ba = a.with_budget(t)
                    bitwise = max(bitwise, float(not np.array_equal(sa.values, b(t).values)))
                    sc, bc = c.with_budget(t)
                    gap = distance1(sa, sc)
                    if gap - ba - bc >= worst[0] - worst[1]:
                        worst = (gap, ba + bc)
                return [
                    make_report("uniqueness.bitwise", case, bitwise, 0.0, {}, seed + 2),
                    make_report("uniqueness.tolerance", case, worst[0], 0.0,
                                {"solver": worst[1], "rounding": 64 * EPS * x.norm1()}, seed + 2,
                                tolerances=[ev.resolvent_tol, loose.resolvent_tol]),
                ]

            reports.append(_run_trial("contraction.identical_inputs", case, seed, identical))
            reports.append(_run_trial("contraction.translation", case, seed + 1, translation))
            try:
                start = time.perf_counter()
                pair = uniqueness()
                for rep in pair:
                    rep.runtime = (time.perf_counter() - start) / 2
                reports.extend(pair)
            except SolverError as exc:
                reports.append(_failed("uniqueness.bitwise", case, seed + 2, exc))
                reports.append(_failed("uniqueness.tolerance", case, seed + 2, exc))

    reports.extend(_resolvent_checks(cfg))
    reports.extend(_mild_checks(cfg))
    return reports


def _resolvent_checks(cfg: SuiteConfig) -> list[CheckReport]:
    reports = []
    ev = cfg.evolve
    for p, shape, k in _cases(cfg, cfg.trials):
        op = make_operator(cfg, p, shape)
        grid = op.grid
        case = case_label(p, grid)
        seed = trial_seed(cfg.seed, "resolvent", p, shape, k)

        def accretivity():
            rng = _rng(seed)
            f = _field(grid, fields.random_uniform(grid, rng))
            g = _field(grid, fields.random_uniform(grid, rng))
            worst = None
            for lam in cfg.lambdas:
                u, iu = op.resolvent_solve(lam, f, ev.resolvent_tol, ev.max_newton_iters, return_info=True)
                v, iv = op.resolvent_solve(lam, g, ev.resolvent_tol, ev.max_newton_iters, return_info=True)
                lhs, rhs = distance1(u, v), distance1(f, g)
                if worst is None or rhs - lhs < worst[2] - worst[1]:
                    worst = (lam, lhs, rhs, grid.measure * (iu.residual + iv.residual))
            lam, lhs, rhs, solver = worst
            return make_report("resolvent.accretivity", case, lhs, rhs, {"allowance": cfg.margin_abs}, seed,
                               lam=lam, solver_budget=solver)

        def order():
            rng = _rng(seed + 1)
            f = fields.random_uniform(grid, rng)
            g = f + rng.uniform(0, 0.5, size=grid.shape)
            worst = -math.inf
            for lam in cfg.lambdas:
                u = op.resolvent_solve(lam, _field(grid, f), ev.resolvent_tol, ev.max_newton_iters)
                v = op.resolvent_solve(lam, _field(grid, g), ev.resolvent_tol, ev.max_newton_iters)
                worst = max(worst, float(np.max(u.values - v.values)))
            return make_report("resolvent.order_preservation", case, worst, 0.0, {"allowance": cfg.margin_abs}, seed + 1)

        def evolve_contraction():
            rng = _rng(seed + 2)
            v1 = _field(grid, fields.random_smooth(grid, rng))
            v2 = _field(grid, fields.random_smooth(grid, rng))
            t = float(rng.uniform(0.05, 1.0))
            p1 = evolve_path(op, v1, t, ev)
            p2 = evolve_path(op, v2, t, ev)
            return make_report("evolve.contraction", case, distance1(p1.final, p2.final), distance1(v1, v2),
                               {"solver": grid.measure * (p1.residual_sum + p2.residual_sum)}, seed + 2, t=t)

        reports.append(_run_trial("resolvent.accretivity", case, seed, accretivity))
        reports.append(_run_trial("resolvent.order_preservation", case, seed + 1, order))
        if k < cfg.ratio_trials:
            reports.append(_run_trial("evolve.contraction", case, seed + 2, evolve_contraction))
    return reports


def _mild_checks(cfg: SuiteConfig) -> list[CheckReport]:
    reports = []
    ev = cfg.evolve
    orders = list(cfg.quantizer_orders)
    for p, shape, k in _cases(cfg, cfg.mild_trials):
        op = make_operator(cfg, p, shape)
        grid = op.grid
        case = case_label(p, grid)
        seed = trial_seed(cfg.seed, "mild", p, shape, k)
        q = DenseQuantizer(grid, cfg.quantizer_amplitude)

        def mild():
            rng = _rng(seed)
            r = _realization(cfg, seed)
            x = _field(grid, fields.random_smooth(grid, rng))
            d = _random_drift(grid, rng)
            rows = mild_approximation_run(x, d, r, q, orders, op, ev, query_times(r, cfg.horizon / 4))
            worst = min(rows, key=lambda row: row.margin)
            gaps = [row.bound for row in rows]
            sup_gaps = [row.sup_gap for row in rows]
            increase = max([b - a for a, b in zip(gaps, gaps[1:])] + [0.0])
            common = dict(orders=orders, input_gaps=gaps, sup_gaps=sup_gaps,
                          initial_gaps=[row.initial_gap for row in rows],
                          drift_gaps=[row.drift_gap for row in rows])
            return [
                make_report("mild.stability", case, worst.sup_gap, worst.bound,
                            {"solver": worst.solver_slack, "rounding": 64 * EPS * (worst.bound + x.norm1())},
                            seed, n=worst.n, **common),
                make_report("mild.gap_monotone", case, increase, 0.0, {}, seed, **common),
            ]

        try:
            start = time.perf_counter()
            pair = mild()
            for rep in pair:
                rep.runtime = (time.perf_counter() - start) / 2
            reports.extend(pair)
        except SolverError as exc:
            reports.append(_failed("mild.stability", case, seed, exc))
            reports.append(_failed("mild.gap_monotone", case, seed, exc))

    for p in cfg.p_values:
        shape = cfg.grids[0]
        op = make_operator(cfg, p, shape)
        grid = op.grid
        case = case_label(p, grid)
        seed = trial_seed(cfg.seed, "mild.fixed_points", p, shape)

        def fixed_points():
            rng = _rng(seed)
            q = DenseQuantizer(grid, cfg.quantizer_amplitude)
            n = orders[0]
            members = [q.member(int(i)) for i in rng.integers(1, n + 1, size=3)]
            d = DriftFunction.per_mark({0: members[1], 1: members[2]})
            r = _realization(cfg, seed)
            rows = mild_approximation_run(members[0], d, r, q, orders, op, ev, query_times(r, cfg.horizon / 4))
            measured = max(max(row.sup_gap, row.initial_gap, row.drift_gap) for row in rows)
            return make_report("mild.fixed_points", case, measured, 0.0, {}, seed)

        reports.append(_run_trial("mild.fixed_points", case, seed, fixed_points))
    return reports


# ---------------------------------------------------------------------------
# bound suite


def run_bound_and_equality_suite(cfg: SuiteConfig) -> list[CheckReport]:
    reports = []
    ev = cfg.evolve
    for p, shape, k in _cases(cfg, cfg.trials):
        op = make_operator(cfg, p, shape)
        grid = op.grid
        case = case_label(p, grid)
        seed = trial_seed(cfg.seed, "bound.norm", p, shape, k)

        def norm_bound():
            rng = _rng(seed)
            r = _realization(cfg, seed)
            x = _field(grid, fields.random_smooth(grid, rng))
            d = _random_drift(grid, rng)
            traj = Trajectory.build(x, d, r, op, ev)
            worst = None
            for t in query_times(r, cfg.horizon / 4):
                state, budget = traj.with_budget(t)
                lhs = state.norm1()
                rhs = x.norm1() + counting_integral(lambda tau, z: d(tau, z).norm1(), r, t)
                items = {"solver": budget, "rounding": 64 * EPS * (lhs + rhs)}
                margin = rhs + sum(items.values()) - lhs
                if worst is None or margin < worst[0]:
                    worst = (margin, t, lhs, rhs, items)
            _, t, lhs, rhs, items = worst
            return make_report("bound.norm", case, lhs, rhs, items, seed, time=t, atoms=len(r))

        reports.append(_run_trial("bound.norm", case, seed, norm_bound))

    for p in cfg.p_values:
        for shape in cfg.grids:
            op = make_operator(cfg, p, shape)
            grid = op.grid
            case = case_label(p, grid)
            seed = trial_seed(cfg.seed, "bound.degenerate", p, shape)

            def zero_input():
                r = _realization(cfg, seed)
                zero = StateField.zeros(grid)
                traj = Trajectory.build(zero, DriftFunction.zero(grid), r, op, ev)
                measured = max(traj(t).norm_inf() for t in query_times(r, cfg.horizon / 4))
                return make_report("bound.zero_input", case, measured, 0.0, {}, seed)

            reports.append(_run_trial("bound.zero_input", case, seed, zero_input))
            for j, (phi1, phi2, law) in enumerate(_equality_cases(cfg, seed)):
                reports.append(_run_trial("bound.equality", case, seed + j,
                                          lambda: _equality(cfg, op, case, seed + j, phi1, phi2, law)))
    return reports


def _equality_cases(cfg: SuiteConfig, seed: int):
    rng = _rng(seed)
    yield 1.0, 2.0, InterArrival.fixed(cfg.horizon / 3.5)
    for _ in range(2):
        yield float(rng.uniform(0, 2)), float(rng.uniform(0, 1)), InterArrival.exponential(cfg.rate)


def _equality(cfg, op, case, seed, phi1, phi2, law) -> CheckReport:
    r = sample_renewal(RenewalSpec(law, seed=seed), cfg.horizon)
    return equality_report(op, phi1, phi2, r, cfg.evolve, cfg.equality_rel, case, seed)


def equality_report(op, phi1: float, phi2: float, r: MarkedPointRealization, ev: EvolveConfig,
                    rel_tol: float = 1e-10, case: str = "config", seed: int = 0) -> CheckReport:
    """Equality in the norm bound for constant nonnegative data ``x = phi1``, ``eta = phi2``.

    Constants are fixed by the flow, so ``||X(t)||_1 = ||x||_1 + N(t) ||eta||_1``.
    The relative error is taken over every atom and every segment midpoint.
    """
    if phi1 < 0 or phi2 < 0:
        raise ConfigError(f"equality case needs nonnegative constants, got {phi1}, {phi2}")
    grid = op.grid
    x = StateField.constant(grid, phi1)
    d = DriftFunction.constant(StateField.constant(grid, phi2))
    traj = Trajectory.build(x, d, r, op, ev)
    worst = (0.0, 0.0)
    bounds = [0.0, *r.times, r.horizon]
    probes = sorted(set(r.times) | {0.5 * (a + b) for a, b in zip(bounds, bounds[1:])})
    for t in probes:
        lhs = traj(t).norm1()
        rhs = x.norm1() + counting_integral(lambda tau, z: d(tau, z).norm1(), r, t)
        rel = abs(lhs - rhs) / rhs if rhs > 0 else abs(lhs)
        worst = max(worst, (rel, t))
    return make_report("bound.equality", case, worst[0], rel_tol, {}, seed,
                       time=worst[1], phi=[phi1, phi2], atoms=len(r))


# ---------------------------------------------------------------------------
# regularity suite


def run_regularity_suite(cfg: SuiteConfig) -> list[CheckReport]:
    reports = []
    ev = cfg.evolve
    for p, shape, k in _cases(cfg, cfg.decay_trials):
        op = make_operator(cfg, p, shape)
        grid = op.grid
        case = case_label(p, grid)
        seed = trial_seed(cfg.seed, "regularity.decay", p, shape, k)

        def decay():
            rng = _rng(seed)
            make = fields.random_uniform if k % 2 else fields.random_smooth
            v = _field(grid, make(grid, rng))
            worst = None
            for t in cfg.decay_times:
                u = evolve(op, v, t, ev)
                measured = generator_apply(op, u).norm_inf()
                bound = 2 * v.norm_inf() / (abs(p - 2) * t)
                if worst is None or measured / bound > worst[0] / worst[1]:
                    worst = (measured, bound, t)
            measured, bound, t = worst
            return make_report("regularity.decay", case, measured, bound, {"discrete_allowance": cfg.decay_slack * bound},
                               seed, t=t, empirical_constant=measured * abs(p - 2) * t / v.norm_inf())

        reports.append(_run_trial("regularity.decay", case, seed, decay))

    for p, shape, k in _cases(cfg, cfg.trials):
        op = make_operator(cfg, p, shape)
        grid = op.grid
        case = case_label(p, grid)
        seed = trial_seed(cfg.seed, "regularity.lq", p, shape, k)

        def lq():
            rng = _rng(seed)
            make = fields.random_uniform if k % 2 else fields.random_smooth
            v = _field(grid, make(grid, rng))
            t = float(rng.uniform(0.05, 1.0))
            u = evolve(op, v, t, ev)
            excess = {str(q): u.norm(q) - v.norm(q) for q in (1, 2, math.inf)}
            q_worst = max(excess, key=excess.get)
            return make_report("regularity.lq_nonexpansive", case, u.norm(float(q_worst)), v.norm(float(q_worst)),
                               {"allowance": cfg.margin_abs}, seed, t=t, q=q_worst, excess=excess)

        reports.append(_run_trial("regularity.lq_nonexpansive", case, seed, lq))

    for p, shape, k in _cases(cfg, cfg.ratio_trials):
        op = make_operator(cfg, p, shape)
        grid = op.grid
        case = case_label(p, grid)
        seed = trial_seed(cfg.seed, "regularity.ratio", p, shape, k)
        reports.append(_run_trial("regularity.semigroup_defect", case, seed,
                                  lambda: _semigroup_defect(cfg, op, case, seed)))
        reports.append(_run_trial("regularity.homogeneity", case, seed + 1,
                                  lambda: _homogeneity(cfg, op, case, seed + 1)))
        reports.append(_run_trial("regularity.resolvent_scaling", case, seed + 2,
                                  lambda: _resolvent_scaling(cfg, op, case, seed + 2)))
        reports.append(_run_trial("regularity.mean_conservation", case, seed + 3,
                                  lambda: _mean_and_energy(cfg, op, case, seed + 3)[0]))
        reports.append(_run_trial("regularity.energy_dissipation", case, seed + 3,
                                  lambda: _mean_and_energy(cfg, op, case, seed + 3)[1]))
        reports.append(_run_trial("generator.weak_pairing", case, seed + 4,
                                  lambda: _weak_pairing(cfg, op, case, seed + 4)))

    for p in cfg.p_values:
        for shape in cfg.grids:
            op = make_operator(cfg, p, shape)
            grid = op.grid
            case = case_label(p, grid)
            seed = trial_seed(cfg.seed, "regularity.time", p, shape)
            reports.append(_run_trial("regularity.lipschitz", case, seed, lambda: _lipschitz(cfg, op, case, seed)))
            reports.append(_run_trial("regularity.continuity", case, seed + 1,
                                      lambda: _continuity(cfg, op, case, seed + 1)))
            reports.append(_run_trial("generator.consistency", case, seed + 2,
                                      lambda: _consistency(cfg, op, case, seed + 2)))
    return reports


def _semigroup_defect(cfg, op, case, seed) -> CheckReport:
    """Defect ratio under doubling of the substep count.

    With ``n = ceil(t * steps)`` the substep counts of ``s``, ``t`` and
    ``s + t`` all double exactly when ``s * steps`` is an integer and the
    fractional part of ``t * steps`` exceeds 1/2.  Monotone data keep every
    face difference away from zero, where the flux law is not smooth.
    """
    grid = op.grid
    rng = _rng(seed)
    v = _field(grid, fields.random_monotone(grid, rng))
    base = cfg.defect_steps
    s, t = 3.0 / base, 0.6 / base
    coarse = EvolveConfig(base, cfg.evolve.resolvent_tol, cfg.evolve.max_newton_iters)
    fine = coarse.refined()
    defects = []
    budget = []
    for c in (coarse, fine):
        whole = evolve_path(op, v, s + t, c)
        first = evolve_path(op, v, s, c)
        second = evolve_path(op, first.final, t, c)
        defects.append(distance1(whole.final, second.final))
        budget.append(grid.measure * (whole.residual_sum + first.residual_sum + second.residual_sum))
    ratio = defects[1] / defects[0] if defects[0] > 0 else math.nan
    # residual errors can move the ratio by at most this much
    ratio_err = (budget[1] + ratio * budget[0]) / defects[0] if defects[0] > 0 else math.inf
    return make_report("regularity.semigroup_defect", case, abs(ratio - 0.5), 0.2, {"solver": ratio_err}, seed,
                       ratio=ratio, defects=defects, steps=[coarse.steps_per_unit_time, fine.steps_per_unit_time],
                       s=s, t=t)


def _homogeneity(cfg, op, case, seed) -> CheckReport:
    grid = op.grid
    rng = _rng(seed)
    u = _field(grid, fields.random_uniform(grid, rng))
    worst = 0.0
    for c in rng.uniform(0.25, 4.0, size=3):
        lhs = op.apply(u * c).values
        rhs = c ** (op.p - 1) * op.apply(u).values
        worst = max(worst, float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs))))
    return make_report("regularity.homogeneity", case, worst, cfg.homogeneity_rel, {}, seed)


def _resolvent_scaling(cfg, op, case, seed) -> CheckReport:
    grid = op.grid
    rng = _rng(seed)
    ev = cfg.evolve
    f = _field(grid, fields.random_smooth(grid, rng))
    c = float(rng.uniform(0.5, 2.0))
    lam = float(rng.choice(cfg.lambdas))
    lhs, i1 = op.resolvent_solve(lam, f * c, ev.resolvent_tol, ev.max_newton_iters, return_info=True)
    rhs, i2 = op.resolvent_solve(lam * c ** (op.p - 2), f, ev.resolvent_tol, ev.max_newton_iters, return_info=True)
    measured = float(np.max(np.abs(lhs.values - c * rhs.values)))
    # the resolvent is an L^inf contraction, so each solve sits within its residual of the exact value
    floor_excess = max(0.0, i1.residual + c * i2.residual - 10 * ev.resolvent_tol)
    return make_report("regularity.resolvent_scaling", case, measured, 10 * ev.resolvent_tol,
                       {"floor_excess": floor_excess}, seed, c=c, lam=lam)


def _mean_and_energy(cfg, op, case, seed):
    grid = op.grid
    rng = _rng(seed)
    v = _field(grid, fields.random_smooth(grid, rng))
    mean_dev = 0.0
    energy_rise = -math.inf
    e0 = op.energy(v)
    for t in (0.1, 1.0):
        u = evolve(op, v, t, cfg.evolve)
        mean_dev = max(mean_dev, abs(u.mean() - v.mean()))
        energy_rise = max(energy_rise, op.energy(u) - e0)
    return (
        make_report("regularity.mean_conservation", case, mean_dev, 0.0, {"allowance": cfg.margin_abs}, seed),
        make_report("regularity.energy_dissipation", case, e0 + energy_rise, e0,
                    {"rounding": 64 * EPS * e0}, seed),
    )


def _weak_pairing(cfg, op, case, seed) -> CheckReport:
    grid = op.grid
    rng = _rng(seed)
    u = _field(grid, fields.random_uniform(grid, rng))
    phi = _field(grid, fields.random_uniform(grid, rng))
    direct = phi.pairing(generator_apply(op, u))
    weak = op.weak_pairing(u, phi)
    scale = grid.cell_volume * float(np.sum(np.abs(phi.values) * np.abs(op.apply(u).values)))
    return make_report("generator.weak_pairing", case, abs(direct - weak), 1e-10, {"rounding": 64 * EPS * scale},
                       seed, direct=direct, weak=weak)


def _lipschitz(cfg, op, case, seed) -> CheckReport:
    """Empirical time-Lipschitz constant on ``[0.1, 1]`` against the bound ``||A v||_1``.

    With a fixed substep count, the resolvent identity gives
    ``||T_n(t + d) v - T_n(t) v||_1 <= d * max_k ||A u_k||_1 <= d * ||A v||_1``.
    """
    grid = op.grid
    rng = _rng(seed)
    ev = cfg.evolve
    v = _field(grid, fields.random_smooth(grid, rng))
    deltas = (1e-2, 1e-3, 1e-4)
    times = same_step_count_times(0.1, 1.0, 6, max(deltas), ev)
    worst = (0.0, 0.0)
    for t in times:
        base = evolve_path(op, v, t, ev)
        for d in deltas:
            moved = evolve_path(op, v, t + d, ev)
            ratio = distance1(moved.final, base.final) / d
            budget = grid.measure * (moved.residual_sum + base.residual_sum) / d
            if ratio - budget > worst[0] - worst[1]:
                worst = (ratio, budget)
    bound = op.apply(v).norm1()
    return make_report("regularity.lipschitz", case, worst[0], bound, {"solver": worst[1]}, seed,
                       lipschitz_constant=worst[0], interval=[0.1, 1.0])


def _continuity(cfg, op, case, seed) -> CheckReport:
    grid = op.grid
    rng = _rng(seed)
    ev = cfg.evolve
    v = _field(grid, fields.random_smooth(grid, rng))
    deltas = (1e-2, 1e-3, 1e-4)
    worst = (-math.inf, 0.0)
    distances = {}
    for t in same_step_count_times(0.1, 1.0, 4, max(deltas), ev):
        base = evolve_path(op, v, t, ev)
        dist = []
        budget = 0.0
        for d in deltas:
            moved = evolve_path(op, v, t + d, ev)
            dist.append(distance1(moved.final, base.final))
            budget += grid.measure * (moved.residual_sum + base.residual_sum)
        distances[t] = dist
        rise = max(b - a for a, b in zip(dist, dist[1:]))
        if rise - budget > worst[0] - worst[1]:
            worst = (rise, budget)
    return make_report("regularity.continuity", case, worst[0], 0.0, {"solver": worst[1]}, seed,
                       deltas=list(deltas), distances={f"{t:.6g}": d for t, d in distances.items()})


def _consistency(cfg, op, case, seed) -> CheckReport:
    """First-order consistency of ``-(evolve(u, h) - u) / h`` with ``A_h u``.

    Uses a monotone state and single steps ``h = 1e-5`` and ``5e-6``, inside
    the asymptotic regime of the stiff discrete system.
    """
    grid = op.grid
    rng = _rng(seed)
    u = _field(grid, fields.random_monotone(grid, rng))
    hs = (1e-5, 5e-6)
    gaps = []
    budget = 0.0
    for h in hs:
        c = EvolveConfig(int(round(1 / h)), cfg.evolve.resolvent_tol, cfg.evolve.max_newton_iters)
        path = evolve_path(op, u, h, c)
        gaps.append(difference_quotient_gap(op, u, h, c))
        budget += grid.measure * path.residual_sum / h
    ratio = gaps[1] / gaps[0]
    return make_report("generator.consistency", case, abs(ratio - 0.5), 0.2, {"solver": budget / gaps[1]}, seed,
                       ratio=ratio, gaps=gaps, steps=list(hs))


# ---------------------------------------------------------------------------
# weak-form suite


def _test_fields(grid: GridDomain, rng):
    x = grid.cell_centers()
    return [
        ("ramp", x[0] / (grid.shape[0] * grid.h)),
        ("bump", fields.bump(grid, 0.0, 1.0, 0.2)),
        ("random", fields.random_smooth(grid, rng)),
    ]


def run_weakform_suite(cfg: SuiteConfig) -> list[CheckReport]:
    reports = []
    ev = cfg.evolve
    for p, shape, k in _cases(cfg, cfg.ratio_trials):
        op = make_operator(cfg, p, shape)
        grid = op.grid
        case = case_label(p, grid)
        seed = trial_seed(cfg.seed, "weakform", p, shape, k)

        def weak():
            rng = _rng(seed)
            r = _realization(cfg, seed)
            x = _field(grid, fields.random_smooth(grid, rng))
            d = _random_drift(grid, rng)
            label, values = _test_fields(grid, rng)[k % 3]
            psi = _field(grid, values)
            fine = ev.refined()
            coarse_traj = Trajectory.build(x, d, r, op, ev)
            fine_traj = Trajectory.build(x, d, r, op, fine)
            coarse = weak_form_profile(coarse_traj, x, d, r, psi, cfg.horizon, op, ev)
            refined = weak_form_profile(fine_traj, x, d, r, psi, cfg.horizon, op, fine)
            t, res = max(coarse, key=lambda item: item[1].residual - item[1].budget)
            sup_c = max(item[1].residual for item in coarse)
            sup_f = max(item[1].residual for item in refined)
            ratio = sup_f / sup_c
            fine_budget = max(item[1].solver_budget + item[1].rounding for item in refined)
            coarse_budget = max(item[1].solver_budget + item[1].rounding for item in coarse)
            ones = StateField.constant(grid, 1.0)
            mass = weak_form_profile(coarse_traj, x, d, r, ones, cfg.horizon, op, ev)
            mt, mres = max(mass, key=lambda item: item[1].residual)
            return [
                make_report("weakform.residual", case, res.residual, res.quadrature_bound,
                            {"solver": res.solver_budget, "rounding": res.rounding}, seed,
                            time=t, test_field=label, substeps=res.substeps),
                make_report("weakform.refinement", case, abs(ratio - 0.5), 0.3,
                            {"solver": (fine_budget + ratio * coarse_budget) / sup_c}, seed,
                            ratio=ratio, residuals=[sup_c, sup_f], test_field=label,
                            steps=[ev.steps_per_unit_time, fine.steps_per_unit_time]),
                make_report("weakform.mass_balance", case, mres.residual, 0.0,
                            {"allowance": cfg.margin_abs}, seed, time=mt),
            ]

        try:
            start = time.perf_counter()
            out = weak()
            for rep in out:
                rep.runtime = (time.perf_counter() - start) / len(out)
            reports.extend(out)
        except SolverError as exc:
            for name in ("weakform.residual", "weakform.refinement", "weakform.mass_balance"):
                reports.append(_failed(name, case, seed, exc))

    for p in cfg.p_values:
        for shape in cfg.grids:
            op = make_operator(cfg, p, shape)
            grid = op.grid
            case = case_label(p, grid)
            seed = trial_seed(cfg.seed, "weakform.flow", p, shape)
            reports.append(_run_trial("weakform.integral_identity", case, seed,
                                      lambda: _integral_identity(cfg, op, case, seed)))
            reports.append(_run_trial("weakform.envelope", case, seed + 1,
                                      lambda: _envelope(cfg, op, case, seed + 1)))
            reports.append(_run_trial("process.cadlag", case, seed + 2,
                                      lambda: _cadlag(cfg, op, case, seed + 2)))

    reports.extend(_point_process_checks(cfg))
    return reports


def _integral_identity(cfg, op, case, seed) -> CheckReport:
    grid = op.grid
    rng = _rng(seed)
    x = _field(grid, fields.random_smooth(grid, rng))
    psi = _field(grid, fields.random_smooth(grid, rng))
    r = MarkedPointRealization([], [], cfg.horizon)
    d = DriftFunction.zero(grid)
    traj = Trajectory.build(x, d, r, op, cfg.evolve)
    (t, res), = weak_form_profile(traj, x, d, r, psi, cfg.horizon, op, cfg.evolve)
    return make_report("weakform.integral_identity", case, res.residual, res.quadrature_bound,
                       {"solver": res.solver_budget, "rounding": res.rounding}, seed, time=t)


def _envelope(cfg, op, case, seed) -> CheckReport:
    """``|<Psi, A T(tau) v>| <= C tau^(-(p-1)/p)`` along the computed flow.

    ``C = (2 |S| |v|_inf^2 / |p-2|)^((p-1)/p) * (p E(Psi))^(1/p)`` follows
    from Hölder's inequality on faces, ``<u, A u> = p E(u)``, and the decay
    bound.  The decay bound carries the same 5% discrete allowance as its
    own check.
    """
    grid = op.grid
    p = op.p
    rng = _rng(seed)
    v = _field(grid, fields.random_uniform(grid, rng))
    psi = _field(grid, fields.random_smooth(grid, rng))
    path = evolve_path(op, v, 1.0, cfg.evolve)
    a = (p - 1) / p
    taus = np.array([(k + 1) * path.dt for k in range(len(path.residuals))])
    g = np.array([abs(psi.pairing(op.apply(u))) for u in path.states[1:]])
    scaled = g * taus ** a
    constant = (2 * grid.measure * v.norm_inf() ** 2 / abs(p - 2)) ** a * (p * op.energy(psi)) ** (1 / p)
    allowance = constant * ((1 + cfg.decay_slack) ** a - 1)
    keep = g > 0
    slope = float(np.polyfit(np.log(taus[keep]), np.log(g[keep]), 1)[0]) if keep.sum() >= 2 else math.nan
    return make_report("weakform.envelope", case, float(np.max(scaled)), constant,
                       {"discrete_allowance": allowance}, seed,
                       fitted_constant=float(np.max(scaled)), loglog_slope=slope, exponent=-a)


def _cadlag(cfg, op, case, seed) -> CheckReport:
    """Right-continuity at atoms and jump sizes ``||X(a) - X(a - e)||_1 -> ||eta||_1``.

    Inter-arrivals are fixed at ``0.7`` so that ``a - e`` and ``a - alpha_{m-1}``
    use the same substep count for ``e <= 1e-2`` at 16 steps per unit time;
    the distance to the left limit is then at most ``e * ||A X_{m-1}||_1``.
    """
    grid = op.grid
    rng = _rng(seed)
    ev = cfg.evolve
    spec = RenewalSpec(InterArrival.fixed(0.7), MarkSpace((0, 1)), (0.5, 0.5), seed)
    r = sample_renewal(spec, cfg.horizon)
    x = _field(grid, fields.random_smooth(grid, rng))
    d = _random_drift(grid, rng)
    traj = Trajectory.build(x, d, r, op, ev)
    worst = (-math.inf, 0.0)
    right = 0.0
    for m, (tau, z) in enumerate(r.atoms, start=1):
        right = max(right, float(not np.array_equal(traj(tau).values, traj.seq.states[m].values)))
        jump = traj.seq.drifts[m - 1].norm1()
        prev = traj.seq.states[m - 1]
        lip = op.apply(prev).norm1()
        for e in (1e-2, 1e-3):
            seg = tau - r.alpha(m - 1)
            same = n_steps(seg - e, ev) == n_steps(seg, ev)
            before, budget = traj.with_budget(tau - e)
            err = abs(distance1(traj(tau), before) - jump)
            bound = e * lip if same else math.inf
            slack = budget + traj.seq.budgets[m] + 64 * EPS * (jump + before.norm1())
            if err - bound - slack > worst[0] - worst[1]:
                worst = (err - bound, slack)
    measured = max(worst[0], 0.0) + right
    return make_report("process.cadlag", case, measured, 0.0, {"solver": worst[1]}, seed, atoms=len(r),
                       right_continuity_violations=right)


def _point_process_checks(cfg: SuiteConfig) -> list[CheckReport]:
    reports = []
    for k in range(cfg.counting_trials):
        seed = trial_seed(cfg.seed, "counting", k)

        def counting():
            rng = _rng(seed)
            law = [InterArrival.exponential(float(rng.uniform(0.5, 5))),
                   InterArrival.uniform(0.05, float(rng.uniform(0.1, 1))),
                   InterArrival.fixed(float(rng.uniform(0.1, 1)))][k % 3]
            r = sample_renewal(RenewalSpec(law, MarkSpace(("a", "b", "c")), (0.2, 0.3, 0.5), seed), 5.0)
            weights = {"a": float(rng.normal()), "b": float(rng.normal()), "c": float(rng.normal())}

            def f(tau, z):
                return math.sin(3 * tau) * weights[z] + tau ** 2

            worst = 0.0
            for t in [0.0, *rng.uniform(0, 5, size=5), *r.times, 5.0]:
                brute = 0.0
                for tau, z in zip(r.times, r.marks):
                    if tau <= t:
                        brute += f(tau, z)
                worst = max(worst, abs(counting_integral(f, r, t) - brute))
            return make_report("counting.sum_formula", "renewal", worst, 0.0, {}, seed, atoms=len(r))

        def hitting():
            r = _realization(cfg, seed)
            times = np.array(r.times)
            bad = int(np.sum(np.diff(times) <= 0)) + int(np.sum(times <= 0)) + int(np.sum(times > r.horizon))
            return make_report("renewal.hitting_times", "renewal", bad, 0.0, {}, seed, atoms=len(r))

        reports.append(_run_trial("counting.sum_formula", "renewal", seed, counting))
        reports.append(_run_trial("renewal.hitting_times", "renewal", seed, hitting))

    seed = trial_seed(cfg.seed, "renewal.poisson_mean")

    def poisson():
        horizon, rate = 10.0, 2.0
        counts = np.array([
            len(sample_renewal(RenewalSpec(InterArrival.exponential(rate), seed=seed + i), horizon))
            for i in range(cfg.poisson_paths)
        ])
        mean = rate * horizon
        sigma = math.sqrt(mean / cfg.poisson_paths)
        return make_report("renewal.poisson_mean", "exponential(2),horizon=10", abs(counts.mean() - mean),
                           3 * sigma, {}, seed, sample_mean=float(counts.mean()), paths=cfg.poisson_paths)

    reports.append(_run_trial("renewal.poisson_mean", "exponential(2),horizon=10", seed, poisson))
    return reports


# ---------------------------------------------------------------------------
# orchestration and output

SUITE_RUNNERS = {
    "contraction": run_contraction_suite,
    "bound": run_bound_and_equality_suite,
    "regularity": run_regularity_suite,
    "weakform": run_weakform_suite,
}


def resolve_suites(names: Iterable[str]) -> list[str]:
    names = list(names) or ["all"]
    out = []
    for n in names:
        if n == "all":
            out.extend(SUITES)
        elif n in SUITE_RUNNERS:
            out.append(n)
        else:
            raise ConfigError(f"unknown suite {n!r}; choose from {', '.join((*SUITES, 'all'))}")
    return sorted(set(out), key=SUITES.index)


def run_suites(cfg: SuiteConfig, names: Iterable[str], jobs: int = 1) -> list[CheckReport]:
    """Run the named suites (``jobs > 1`` runs suites in separate processes) and audit coverage."""
    suites = resolve_suites(names)
    reports = []
    if jobs > 1 and len(suites) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=min(jobs, len(suites))) as pool:
            for part in pool.map(_run_one,
                                 [cfg] * len(suites), suites):
                reports.extend(part)
    else:
        for s in suites:
            reports.extend(SUITE_RUNNERS[s](cfg))
    audit_registry(reports=reports, suites=suites)
    return sort_reports(reports)


def _run_one(cfg: SuiteConfig, suite: str) -> list[CheckReport]:
    return SUITE_RUNNERS[suite](cfg)


def sort_reports(reports: Iterable[CheckReport]) -> list[CheckReport]:
    return sorted(reports, key=lambda r: (r.check, r.case, r.seed))


def reports_jsonl(reports: Iterable[CheckReport]) -> str:
    return "".join(r.to_json() + "\n" for r in sort_reports(reports))


@dataclass
class SummaryRow:
    check: str
    case: str
    trials: int
    worst_margin: float
    worst_measured: float
    pass_rate: float


def summarize(reports: Iterable[CheckReport], by_case: bool = True) -> list[SummaryRow]:
    groups: dict = {}
    for r in sort_reports(reports):
        key = (r.check, r.case if by_case else "*")
        groups.setdefault(key, []).append(r)
    rows = []
    for (check, case), items in groups.items():
        worst = min(items, key=lambda r: r.margin)
        rows.append(SummaryRow(check, case, len(items), worst.margin, worst.measured,
                               sum(r.passed for r in items) / len(items)))
    return rows


def summary_csv(rows: Iterable[SummaryRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["check", "case", "trials", "worst_margin", "worst_measured", "pass_rate"])
    for row in rows:
        w.writerow([row.check, row.case, row.trials, fields.format_float(row.worst_margin),
                    fields.format_float(row.worst_measured), fields.format_float(row.pass_rate)])
    return buf.getvalue()


def timings_csv(reports: Iterable[CheckReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["check", "case", "seed", "runtime_seconds"])
    for r in sort_reports(reports):
        w.writerow([r.check, r.case, r.seed, f"{r.runtime:.6f}"])
    return buf.getvalue()


def write_reports(out_dir, reports: list[CheckReport]) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "reports": out / "reports.jsonl",
        "summary": out / "summary.csv",
        "timings": out / "timings.csv",
    }
    paths["reports"].write_text(reports_jsonl(reports))
    paths["summary"].write_text(summary_csv(summarize(reports)))
    paths["timings"].write_text(timings_csv(reports))
    return paths


def failing(reports: Iterable[CheckReport]) -> list[CheckReport]:
    return [r for r in sort_reports(reports) if not r.passed]

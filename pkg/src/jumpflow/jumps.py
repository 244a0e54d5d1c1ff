"""Jump sequences and the piecewise-flow process they generate.

Given an initial state ``x``, a drift ``eta(time, mark)`` and a realization
with atoms ``(alpha_m, z_m)``, the jump sequence is

    X_0 = x,    X_m = T(alpha_m - alpha_{m-1}) X_{m-1} + eta(alpha_m, z_m),

and the process is ``X(t) = T(t - alpha_m) X_m`` for ``t`` in
``[alpha_m, alpha_{m+1})``.  Every state carries the accumulated solver
budget ``|S| * sum(resolvent residuals)`` of the computation that produced
it.  That budget bounds its L^1 distance from the trajectory computed with
exact resolvents.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Hashable, Sequence

import numpy as np

from .errors import DomainError, NumericError, SolverError
from .fields import format_float
from .grid import StateField, distance1
from .point_process import MarkedPointRealization, counting_integral
from .quantizer import DenseQuantizer
from .semigroup import EvolveConfig, EvolvePath, evolve_path, midpoint_pairing_integral


class DriftFunction:
    """Jump size ``eta(time, mark)``, evaluated lazily and only at atoms."""

    def __init__(self, evaluator: Callable[[float, Hashable], StateField], bound: float | None = None,
                 name: str = "drift"):
        self._evaluator = evaluator
        self.bound = bound
        self.name = name

    def __call__(self, time: float, mark: Hashable) -> StateField:
        out = self._evaluator(time, mark)
        if not isinstance(out, StateField):
            raise DomainError(f"{self.name} must return a StateField, got {type(out).__name__}")
        if self.bound is not None and out.norm_inf() > self.bound * (1 + 1e-12):
            raise NumericError(
                f"{self.name}({time}, {mark!r}) has sup norm {out.norm_inf()} above declared bound {self.bound}"
            )
        return out

    @classmethod
    def constant(cls, field: StateField) -> "DriftFunction":
        return cls(lambda t, z: field, bound=field.norm_inf(), name="constant drift")

    @classmethod
    def per_mark(cls, table: dict) -> "DriftFunction":
        def ev(t, z):
            try:
                return table[z]
            except KeyError:
                raise DomainError(f"no drift for mark {z!r}") from None

        bound = max(f.norm_inf() for f in table.values()) if table else 0.0
        return cls(ev, bound=bound, name="per-mark drift")

    @classmethod
    def zero(cls, grid) -> "DriftFunction":
        return cls.constant(StateField.zeros(grid))

    def compose(self, fn: Callable[[StateField], StateField], name: str) -> "DriftFunction":
        return DriftFunction(lambda t, z: fn(self(t, z)), name=name)


@dataclass
class JumpSequence:
    states: list
    times: tuple
    marks: tuple
    drifts: list
    # solver budget of each X_m, cumulative along the sequence
    budgets: list
    # evolve path from X_{m-1} to the left limit at alpha_m, for m = 1..M
    paths: list = field(default_factory=list, repr=False)

    def __len__(self):
        return len(self.states)

    def left_limit(self, m: int) -> StateField:
        """``X(alpha_m-)``, the flowed state just before the ``m``-th jump."""
        if not 1 <= m < len(self.states):
            raise DomainError(f"left limits exist for atoms 1..{len(self.states) - 1}, got {m}")
        return self.paths[m - 1].final


def build_jump_sequence(x: StateField, drift: DriftFunction, r: MarkedPointRealization, op,
                        cfg: EvolveConfig) -> JumpSequence:
    if x.grid != op.grid:
        raise DomainError(f"initial state lives on {x.grid}, operator on {op.grid}")
    measure = x.grid.measure
    states = [x]
    drifts = []
    budgets = [0.0]
    paths = []
    prev_time = 0.0
    for m, (tau, z) in enumerate(r.atoms, start=1):
        try:
            path = evolve_path(op, states[-1], tau - prev_time, cfg)
        except SolverError as exc:
            raise SolverError(f"atom {m} (time {tau}): {exc}", exc.trace, exc.residual) from exc
        eta = drift(tau, z)
        if eta.grid != x.grid:
            raise DomainError(f"drift at atom {m} lives on {eta.grid}, expected {x.grid}")
        states.append(path.final + eta)
        drifts.append(eta)
        budgets.append(budgets[-1] + measure * path.residual_sum)
        paths.append(path)
        prev_time = tau
    return JumpSequence(states, r.times, r.marks, drifts, budgets, paths)


class Trajectory:
    """Queryable càdlàg path ``t -> X(t)`` on ``[0, horizon]``."""

    def __init__(self, seq: JumpSequence, realization: MarkedPointRealization, op, cfg: EvolveConfig):
        self.seq = seq
        self.realization = realization
        self.op = op
        self.cfg = cfg

    @classmethod
    def build(cls, x, drift, r, op, cfg) -> "Trajectory":
        return cls(build_jump_sequence(x, drift, r, op, cfg), r, op, cfg)

    @property
    def horizon(self) -> float:
        return self.realization.horizon

    def segment(self, t: float) -> tuple[int, EvolvePath]:
        """Index ``m`` with ``t`` in ``[alpha_m, alpha_{m+1})`` and the path from ``X_m`` to ``X(t)``."""
        m = self.realization.index_at(t)
        return m, evolve_path(self.op, self.seq.states[m], t - self.realization.alpha(m), self.cfg)

    def __call__(self, t: float) -> StateField:
        return self.segment(t)[1].final

    def with_budget(self, t: float) -> tuple[StateField, float]:
        """``X(t)`` and the solver budget bounding its distance to the exact-resolvent path."""
        m, path = self.segment(t)
        return path.final, self.seq.budgets[m] + self.op.grid.measure * path.residual_sum

    def left_limit(self, t: float) -> StateField:
        """``X(t-)``; equals ``X(t)`` away from atoms."""
        m = self.realization.index_at(t)
        if m > 0 and self.realization.alpha(m) == t:
            return self.seq.left_limit(m)
        return self(t)


def evaluate_trajectory(traj: Trajectory, t: float) -> StateField:
    return traj(t)


def query_times(r: MarkedPointRealization, step: float) -> list:
    """Uniform grid of spacing ``step`` on ``[0, horizon]`` merged with all atom times and midpoints."""
    if not step > 0:
        raise DomainError(f"query step must be positive, got {step}")
    n = int(math.floor(r.horizon / step + 1e-9))
    grid = [k * step for k in range(n + 1)]
    bounds = [0.0, *r.times, r.horizon]
    mids = [0.5 * (a + b) for a, b in zip(bounds, bounds[1:]) if b > a]
    return sorted(set(grid) | set(r.times) | set(mids) | {r.horizon})


@dataclass
class WeakFormResidual:
    residual: float
    quadrature_bound: float
    solver_budget: float
    rounding: float
    substeps: int

    @property
    def budget(self) -> float:
        return self.quadrature_bound + self.solver_budget + self.rounding


def weak_form_profile(traj: Trajectory, x: StateField, drift: DriftFunction,
                      r: MarkedPointRealization, psi: StateField, t: float, op,
                      cfg: EvolveConfig) -> list:
    """Weak-form residuals at every atom time in ``(0, t]`` and at ``t`` itself.

    Returns ``(time, WeakFormResidual)`` pairs in time order; see
    :func:`strong_solution_residual` for the quantity and its budget.
    """
    if not 0 < t <= r.horizon:
        raise DomainError(f"residual time must lie in (0, {r.horizon}], got {t}")
    measure = x.grid.measure
    psi_sup = psi.norm_inf()
    eps = np.finfo(float).eps
    x_sup_term = psi_sup * x.norm1()
    m_t = r.index_at(t)
    integral = quad = solver = magnitude = jumps = jump_mag = 0.0
    steps = 0
    out = []

    def record(time, state):
        lhs = psi.pairing(state - x)
        rounding = 64 * eps * (magnitude + abs(lhs) + jump_mag + psi_sup * state.norm1() + x_sup_term)
        res = WeakFormResidual(abs(lhs + integral - jumps), quad, solver, rounding, steps)
        out.append((time, res))

    for m in range(m_t + 1):
        start = r.alpha(m)
        end = t if m == m_t else r.alpha(m + 1)
        if end == start:
            break  # t is an atom time, already recorded
        path = traj.seq.paths[m] if m < m_t else evolve_path(op, traj.seq.states[m], end - start, cfg)
        value, bound = midpoint_pairing_integral(op, path, psi)
        integral += value
        quad += bound
        solver += psi_sup * measure * path.residual_sum
        magnitude += abs(value)
        steps += len(path.residuals)
        if m < m_t:
            # the jump at alpha_{m+1}; the sum over atoms is the counting integral
            jump = psi.pairing(traj.seq.drifts[m])
            jumps += jump
            jump_mag += abs(jump)
            record(end, traj.seq.states[m + 1])
        else:
            record(end, path.final)
    return out


def strong_solution_residual(traj: Trajectory, x: StateField, drift: DriftFunction,
                             r: MarkedPointRealization, psi: StateField, t: float, op,
                             cfg: EvolveConfig) -> WeakFormResidual:
    """Weak-form defect of the trajectory against the test field ``psi`` at time ``t``.

    Computes ``|<psi, X(t) - x> + int_0^t <psi, A X(tau)> dtau - sum_{alpha_k <= t} <psi, eta_k>|``.
    The time integral uses the midpoint rule on each evolve substep of each
    inter-atom segment.  Substeps end exactly at atom times, so the
    integrand is never sampled across a jump.  The jump sum is checked
    against :func:`counting_integral` of the drift pairings.
    """
    profile = weak_form_profile(traj, x, drift, r, psi, t, op, cfg)
    jumps = counting_integral(lambda tau, z: psi.pairing(drift(tau, z)), r, t)
    cached = math.fsum(psi.pairing(e) for e in traj.seq.drifts[: r.count(t)])
    if abs(jumps - cached) > 1e-12 * (1 + abs(jumps)):
        raise NumericError("drift differs from the one used to build the trajectory")
    return profile[-1][1]


@dataclass
class MildRunRow:
    n: int
    initial_gap: float
    drift_gap: float
    sup_gap: float
    solver_slack: float

    @property
    def bound(self) -> float:
        return self.initial_gap + self.drift_gap

    @property
    def margin(self) -> float:
        return self.bound + self.solver_slack - self.sup_gap


def mild_approximation_run(x: StateField, drift: DriftFunction, r: MarkedPointRealization,
                           q: DenseQuantizer, n_list: Sequence[int], op, cfg: EvolveConfig,
                           query: Sequence[float] | None = None) -> list:
    """Compare the trajectory of ``(x, eta)`` with those of ``(G_n x, G_n o eta)``.

    Reports, per ``n``, the initial gap, the summed drift gap over the atoms,
    the sup over query times of ``||X_n(t) - X(t)||_1`` and the solver slack
    of both trajectories.
    """
    n_list = list(n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])) or not n_list or n_list[0] < 1:
        raise DomainError(f"n_list must be increasing positive integers, got {n_list}")
    if query is None:
        query = query_times(r, r.horizon / 8)
    reference = Trajectory.build(x, drift, r, op, cfg)
    ref_states = [reference.with_budget(t) for t in query]
    etas = [drift(tau, z) for tau, z in r.atoms]
    rows = []
    for n in n_list:
        xn = q.quantize(n, x)
        eta_n = {k: q.quantize(n, e) for k, e in enumerate(etas)}
        index = {tau: k for k, tau in enumerate(r.times)}
        drift_n = DriftFunction(lambda tau, z: eta_n[index[tau]], name=f"quantized drift n={n}")
        approx = Trajectory.build(xn, drift_n, r, op, cfg)
        sup_gap = 0.0
        slack = 0.0
        for t, (ref, ref_budget) in zip(query, ref_states):
            state, budget = approx.with_budget(t)
            sup_gap = max(sup_gap, distance1(state, ref))
            slack = max(slack, budget + ref_budget)
        rows.append(MildRunRow(
            n=n,
            initial_gap=distance1(xn, x),
            drift_gap=math.fsum(distance1(eta_n[k], e) for k, e in enumerate(etas)),
            sup_gap=sup_gap,
            solver_slack=slack,
        ))
    return rows


def write_trajectory_csv(path, traj: Trajectory, times: Sequence[float]) -> None:
    """RFC-4180 table with columns ``t, cell_0, ..., cell_{K-1}``."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    size = traj.op.grid.size
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["t", *[f"cell_{k}" for k in range(size)]])
        for t in times:
            w.writerow([format_float(t), *map(format_float, traj(t).values.ravel())])


def write_jumps_csv(path, seq: JumpSequence) -> None:
    """One row per jump state: ``m, time, mark, cell_0, ...`` (``m = 0`` is the initial state)."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    size = seq.states[0].grid.size
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["m", "time", "mark", *[f"cell_{k}" for k in range(size)]])
        for m, state in enumerate(seq.states):
            time = 0.0 if m == 0 else seq.times[m - 1]
            mark = "" if m == 0 else seq.marks[m - 1]
            w.writerow([m, format_float(time), mark, *map(format_float, state.values.ravel())])

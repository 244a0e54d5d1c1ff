"""Time stepping of the nonlinear semigroup by the exponential formula.

``evolve(op, v, t, cfg)`` returns ``(I + (t/n) A)^(-n) v`` with
``n = max(1, ceil(t * steps_per_unit_time))``.  Any object exposing ``grid``,
``apply(u)`` and ``resolvent_solve(lam, f, tol, max_iter, return_info)`` can
be evolved; :class:`jumpflow.plaplacian.PLaplacian` is the concrete one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .errors import ConfigError, DomainError, SolverError
from .grid import GridDomain, StateField, distance1


class AccretiveOperator(Protocol):
    grid: GridDomain

    def apply(self, u: StateField) -> StateField: ...

    def resolvent_solve(self, lam, f, tol=1e-10, max_iter=100, return_info=False): ...


@dataclass(frozen=True)
class EvolveConfig:
    steps_per_unit_time: int = 16
    resolvent_tol: float = 1e-10
    max_newton_iters: int = 100

    def __post_init__(self):
        if int(self.steps_per_unit_time) != self.steps_per_unit_time or self.steps_per_unit_time < 1:
            raise ConfigError(f"steps_per_unit_time must be a positive integer, got {self.steps_per_unit_time}")
        if not self.resolvent_tol > 0:
            raise ConfigError(f"resolvent_tol must be positive, got {self.resolvent_tol}")
        if int(self.max_newton_iters) != self.max_newton_iters or self.max_newton_iters < 1:
            raise ConfigError(f"max_newton_iters must be a positive integer, got {self.max_newton_iters}")

    def refined(self, factor: int = 2) -> "EvolveConfig":
        return EvolveConfig(self.steps_per_unit_time * factor, self.resolvent_tol, self.max_newton_iters)


def n_steps(t: float, cfg: EvolveConfig) -> int:
    """Number of implicit Euler substeps used for a time span ``t > 0``."""
    return max(1, math.ceil(t * cfg.steps_per_unit_time))


@dataclass
class EvolvePath:
    """All substep states of one evolve call.

    ``states[0]`` is the input and ``states[-1]`` the result; ``residuals``
    holds the achieved sup-norm resolvent residual of each substep.
    """

    states: list
    dt: float
    residuals: list = field(default_factory=list)

    @property
    def final(self) -> StateField:
        return self.states[-1]

    @property
    def residual_sum(self) -> float:
        return float(sum(self.residuals))


def _check(op, v: StateField, t: float):
    if v.grid != op.grid:
        raise DomainError(f"state lives on {v.grid}, operator on {op.grid}")
    if not (t >= 0 and math.isfinite(t)):
        raise DomainError(f"evolution time must be finite and >= 0, got {t}")


def evolve_path(op, v: StateField, t: float, cfg: EvolveConfig) -> EvolvePath:
    _check(op, v, t)
    if t == 0:
        return EvolvePath([v], 0.0, [])
    n = n_steps(t, cfg)
    dt = t / n
    states = [v]
    residuals = []
    u = v
    for k in range(n):
        try:
            u, info = op.resolvent_solve(
                dt, u, cfg.resolvent_tol, cfg.max_newton_iters, return_info=True
            )
        except SolverError as exc:
            raise SolverError(
                f"substep {k + 1}/{n} of evolve(t={t}): {exc}", exc.trace, exc.residual
            ) from exc
        states.append(u)
        residuals.append(info.residual)
    return EvolvePath(states, dt, residuals)


def evolve(op, v: StateField, t: float, cfg: EvolveConfig) -> StateField:
    """Approximate ``T_A(t) v``; ``t = 0`` returns ``v`` itself."""
    return evolve_path(op, v, t, cfg).final


def generator_apply(op, u: StateField) -> StateField:
    """Generator action on a bounded state; in finite dimensions this is ``A_h u``."""
    if u.grid != op.grid:
        raise DomainError(f"state lives on {u.grid}, operator on {op.grid}")
    out = op.apply(u)
    if not np.all(np.isfinite(out.values)):
        raise FloatingPointError("generator overflowed")
    return out


def semigroup_defect(op, v: StateField, s: float, t: float, cfg: EvolveConfig) -> float:
    """``||evolve(v, s+t) - evolve(evolve(v, s), t)||_1``."""
    if s < 0 or t < 0:
        raise DomainError("semigroup times must be non-negative")
    if s == 0:
        return 0.0
    whole = evolve(op, v, s + t, cfg)
    split = evolve(op, evolve(op, v, s, cfg), t, cfg)
    return distance1(whole, split)


def difference_quotient_gap(op, u: StateField, dt: float, cfg: EvolveConfig) -> float:
    """``||A_h u + (evolve(u, dt) - u) / dt||_1``: first-order consistency of the generator."""
    moved = evolve(op, u, dt, cfg)
    quotient = (moved.values - u.values) / dt
    return u.grid.cell_volume * float(np.sum(np.abs(generator_apply(op, u).values + quotient)))


def midpoint_pairing_integral(op, path: EvolvePath, psi: StateField) -> tuple[float, float]:
    """Composite midpoint rule for ``int <psi, A X(tau)> dtau`` along a path.

    The integrand on each substep is evaluated at the average of the two
    substep states, so no further resolvent solves are needed.  Returns the
    integral and an a-posteriori bound on its distance from the implicit
    Euler sum ``sum dt <psi, A u_{k+1}>`` (which telescopes exactly).
    """
    total = 0.0
    bound = 0.0
    states = path.states
    for a, b in zip(states[:-1], states[1:]):
        mid = StateField(a.grid, 0.5 * (a.values + b.values))
        g_mid = psi.pairing(op.apply(mid))
        g_end = psi.pairing(op.apply(b))
        total += path.dt * g_mid
        bound += path.dt * abs(g_mid - g_end)
    return total, bound


def integral_identity_defect(op, v: StateField, psi: StateField, t: float, cfg: EvolveConfig) -> dict:
    """Defect of ``int_0^t <psi, A T(tau) v> dtau + <psi, T(t) v - v> = 0``.

    Returns the defect together with the quadrature bound and the solver
    budget ``||psi||_inf * |S| * sum(residuals)``.
    """
    path = evolve_path(op, v, t, cfg)
    integral, quad = midpoint_pairing_integral(op, path, psi)
    defect = abs(integral + psi.pairing(path.final - v))
    solver = psi.norm_inf() * v.grid.measure * path.residual_sum
    return {"defect": defect, "quadrature_bound": quad, "solver_budget": solver, "steps": len(path.residuals)}


def lipschitz_ratio(op, v: StateField, times, deltas, cfg: EvolveConfig) -> float:
    """Largest ``||T(t+d) v - T(t) v||_1 / d`` over the given times and increments.

    Times should be chosen so that ``t`` and ``t + d`` use the same number of
    substeps; across a change of substep count the discrete flow jumps by the
    time-discretisation error rather than by ``O(d)``.
    """
    worst = 0.0
    for t in times:
        base = evolve(op, v, t, cfg)
        for d in deltas:
            worst = max(worst, distance1(evolve(op, v, t + d, cfg), base) / d)
    return worst


def same_step_count_times(t0: float, t1: float, count: int, max_delta: float, cfg: EvolveConfig) -> list:
    """Sample ``count`` times in ``[t0, t1]`` where ``t`` and ``t + max_delta`` share a substep count."""
    out = []
    for t in np.linspace(t0, t1, count):
        t = float(t)
        while n_steps(t, cfg) != n_steps(t + max_delta, cfg):
            # nudge past the step-count boundary
            t = math.ceil(t * cfg.steps_per_unit_time) / cfg.steps_per_unit_time + 1e-9
        if t <= t1 + 1.0 / cfg.steps_per_unit_time:
            out.append(t)
    return out

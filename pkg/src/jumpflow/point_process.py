"""Finite marked point processes on ``(0, horizon]`` and pathwise counting integrals.

Realizations are renewal sequences: inter-arrival times ``beta_k`` are drawn
i.i.d. and the hitting times are ``alpha_m = beta_1 + ... + beta_m``.  Marks
come from a finite :class:`MarkSpace`.  Inter-arrival and mark draws use two
independent child streams of one seed, so the mark law can change without
moving the atom times.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np

from .errors import ConfigError, DomainError, NumericError


@dataclass(frozen=True)
class MarkSpace:
    marks: tuple

    def __post_init__(self):
        marks = tuple(self.marks)
        object.__setattr__(self, "marks", marks)
        if not marks:
            raise ConfigError("mark space must be non-empty")
        if len(set(marks)) != len(marks):
            raise ConfigError(f"mark identifiers must be unique, got {list(marks)}")

    def __len__(self):
        return len(self.marks)

    def __contains__(self, z):
        return z in self.marks


@dataclass(frozen=True)
class InterArrival:
    """Law of the strictly positive inter-arrival times.

    ``kind`` is ``"exponential"`` (``rate``), ``"uniform"`` (``a``, ``b`` with
    ``0 < a < b``) or ``"fixed"`` (``d > 0``).
    """

    kind: str
    rate: float | None = None
    a: float | None = None
    b: float | None = None
    d: float | None = None

    def __post_init__(self):
        def positive(name, v):
            if v is None or not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{self.kind} inter-arrival needs {name} > 0, got {v}")

        if self.kind == "exponential":
            positive("rate", self.rate)
        elif self.kind == "uniform":
            positive("a", self.a)
            if self.b is None or not (math.isfinite(self.b) and self.b > self.a):
                raise ConfigError(f"uniform inter-arrival needs b > a, got a={self.a}, b={self.b}")
        elif self.kind == "fixed":
            positive("d", self.d)
        else:
            raise ConfigError(f"unknown inter-arrival law {self.kind!r} (exponential, uniform, fixed)")

    @classmethod
    def exponential(cls, rate: float) -> "InterArrival":
        return cls("exponential", rate=float(rate))

    @classmethod
    def uniform(cls, a: float, b: float) -> "InterArrival":
        return cls("uniform", a=float(a), b=float(b))

    @classmethod
    def fixed(cls, d: float) -> "InterArrival":
        return cls("fixed", d=float(d))

    @property
    def mean(self) -> float:
        if self.kind == "exponential":
            return 1.0 / self.rate
        if self.kind == "uniform":
            return 0.5 * (self.a + self.b)
        return self.d

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "exponential":
            return rng.exponential(1.0 / self.rate, size)
        if self.kind == "uniform":
            return rng.uniform(self.a, self.b, size)
        return np.full(size, self.d)

    def to_dict(self) -> dict:
        keys = {"exponential": ("rate",), "uniform": ("a", "b"), "fixed": ("d",)}[self.kind]
        return {"kind": self.kind, **{k: getattr(self, k) for k in keys}}

    @classmethod
    def from_dict(cls, d: dict) -> "InterArrival":
        return cls(**d)


@dataclass(frozen=True)
class RenewalSpec:
    inter_arrival: InterArrival
    mark_space: MarkSpace = field(default_factory=lambda: MarkSpace((0,)))
    mark_weights: tuple = (1.0,)
    seed: int = 0

    def __post_init__(self):
        w = tuple(float(x) for x in self.mark_weights)
        object.__setattr__(self, "mark_weights", w)
        if len(w) != len(self.mark_space):
            raise ConfigError(
                f"{len(w)} mark weights for {len(self.mark_space)} marks"
            )
        if any(not (x >= 0) for x in w) or abs(sum(w) - 1.0) > 1e-12:
            raise ConfigError(f"mark weights must be a probability vector, got {list(w)}")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def to_dict(self) -> dict:
        return {
            "inter_arrival": self.inter_arrival.to_dict(),
            "marks": list(self.mark_space.marks),
            "mark_weights": list(self.mark_weights),
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RenewalSpec":
        return cls(
            InterArrival.from_dict(d["inter_arrival"]),
            MarkSpace(tuple(d["marks"])),
            tuple(d["mark_weights"]),
            int(d["seed"]),
        )


class MarkedPointRealization:
    """One path of a finite simple marked point process on ``(0, horizon]``."""

    __slots__ = ("times", "marks", "horizon", "seed", "spec")

    def __init__(self, times: Sequence[float], marks: Sequence[Hashable], horizon: float,
                 seed: int | None = None, spec: RenewalSpec | None = None):
        times = tuple(float(t) for t in times)
        marks = tuple(marks)
        horizon = float(horizon)
        if not (math.isfinite(horizon) and horizon > 0):
            raise DomainError(f"horizon must be positive, got {horizon}")
        if len(times) != len(marks):
            raise DomainError(f"{len(times)} times but {len(marks)} marks")
        if times and not (times[0] > 0 and times[-1] <= horizon):
            raise DomainError(f"atom times must lie in (0, {horizon}]")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DomainError("atom times must be strictly increasing")
        self.times = times
        self.marks = marks
        self.horizon = horizon
        self.seed = seed
        self.spec = spec

    def __len__(self):
        return len(self.times)

    def __eq__(self, other):
        return (
            isinstance(other, MarkedPointRealization)
            and self.times == other.times
            and self.marks == other.marks
            and self.horizon == other.horizon
        )

    __hash__ = None

    def __repr__(self):
        return f"MarkedPointRealization({len(self)} atoms on (0, {self.horizon}])"

    @property
    def atoms(self) -> list:
        return list(zip(self.times, self.marks))

    def alpha(self, m: int) -> float:
        """Hitting time ``alpha_m`` with ``alpha_0 = 0``."""
        return 0.0 if m == 0 else self.times[m - 1]

    def count(self, t: float) -> int:
        """Number of atoms in ``(0, t]``."""
        self._check_time(t)
        return bisect.bisect_right(self.times, t)

    def index_at(self, t: float) -> int:
        """The ``m`` with ``t`` in ``[alpha_m, alpha_{m+1})``."""
        return self.count(t)

    def _check_time(self, t: float):
        if not (0 <= t <= self.horizon):
            raise DomainError(f"time {t} outside [0, {self.horizon}]")

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "times": list(self.times),
            "marks": list(self.marks),
            "seed": self.seed,
            "spec": self.spec.to_dict() if self.spec is not None else None,
        }

    def to_json(self) -> str:
        # repr-based float formatting in json is shortest round-trip, so
        # decoding recovers every time bit for bit
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "MarkedPointRealization":
        spec = RenewalSpec.from_dict(d["spec"]) if d.get("spec") else None
        return cls(d["times"], d["marks"], d["horizon"], d.get("seed"), spec)

    @classmethod
    def from_json(cls, text: str) -> "MarkedPointRealization":
        return cls.from_dict(json.loads(text))


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    time_ss, mark_ss = np.random.SeedSequence(int(seed)).spawn(2)
    return np.random.default_rng(time_ss), np.random.default_rng(mark_ss)


def sample_renewal(spec: RenewalSpec, horizon: float) -> MarkedPointRealization:
    """Renewal path on ``(0, horizon]``; deterministic in ``spec.seed``."""
    if not (math.isfinite(horizon) and horizon > 0):
        raise DomainError(f"horizon must be positive, got {horizon}")
    time_rng, mark_rng = _streams(spec.seed)
    law = spec.inter_arrival
    times: list[float] = []
    total = 0.0
    # draw in batches sized by the expected count so the stream consumption
    # is a deterministic function of the seed alone
    batch = max(8, int(2 * horizon / law.mean) + 8)
    while total <= horizon:
        for beta in law.draw(time_rng, batch):
            total += float(beta)
            if total > horizon:
                break
            times.append(total)
    if len(spec.mark_space) == 1:
        marks = [spec.mark_space.marks[0]] * len(times)
    else:
        idx = mark_rng.choice(len(spec.mark_space), size=len(times), p=np.array(spec.mark_weights))
        marks = [spec.mark_space.marks[k] for k in idx]
    return MarkedPointRealization(times, marks, horizon, int(spec.seed), spec)


def atoms_in_window(r: MarkedPointRealization, t: float) -> list:
    """Atoms ``(alpha_k, z_k)`` with ``alpha_k <= t`` in time order."""
    k = r.count(t)
    return list(zip(r.times[:k], r.marks[:k]))


def counting_integral(f: Callable[[float, Hashable], float], r: MarkedPointRealization, t: float) -> float:
    """Integral of ``f`` against the counting measure over ``(0, t] x Z``.

    For a finite simple process this is the finite sum of ``f`` over the
    atoms in the window; a non-finite value raises :class:`NumericError`
    naming the atom.
    """
    total = 0.0
    for k, (tau, z) in enumerate(atoms_in_window(r, t), start=1):
        v = float(f(tau, z))
        if not math.isfinite(v):
            raise NumericError(f"integrand is {v} at atom {k} (time {tau!r}, mark {z!r})")
        total += v
    return total

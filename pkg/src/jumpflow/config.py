"""JSON run configuration: schema, diagnostics, and conversion to module objects.

Every section forbids unknown keys, so a misspelt tolerance is an error
instead of a silently ignored setting.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import fields
from .errors import ConfigError
from .grid import GridDomain, StateField
from .jumps import DriftFunction
from .plaplacian import PLaplacian, WeightField, check_exponent
from .point_process import InterArrival, MarkSpace, RenewalSpec
from .semigroup import EvolveConfig
from .verification import SuiteConfig


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridSpec(_Strict):
    cells: list[int] = Field(default=[64], min_length=1, max_length=2)
    h: float | None = Field(default=None, gt=0)

    @field_validator("cells")
    @classmethod
    def _positive(cls, v):
        if any(n < 2 for n in v):
            raise ValueError("every axis needs at least 2 cells")
        return v

    def build(self) -> GridDomain:
        if self.h is None:
            return GridDomain.unit(*self.cells)
        return GridDomain(tuple(self.cells), self.h)


class WeightSpec(_Strict):
    name: Literal["constant", "checkerboard", "bump", "expression"] = "constant"
    params: dict[str, Union[float, int, str]] = Field(default_factory=dict)

    def build(self, grid: GridDomain) -> WeightField:
        values = _named_field(grid, self.name, self.params, "weight")
        return WeightField.from_cells(grid, values)


class InterArrivalSpec(_Strict):
    kind: Literal["exponential", "uniform", "fixed"] = "fixed"
    rate: float | None = None
    a: float | None = None
    b: float | None = None
    d: float | None = None

    @model_validator(mode="after")
    def _law(self):
        self.build()
        return self

    def build(self) -> InterArrival:
        if self.kind == "fixed" and self.d is None:
            return InterArrival.fixed(1.0)
        return InterArrival(self.kind, self.rate, self.a, self.b, self.d)


class RenewalConfig(_Strict):
    inter_arrival: InterArrivalSpec = InterArrivalSpec()
    marks: list[Union[int, str]] = Field(default=[0], min_length=1)
    mark_weights: list[float] | None = None

    def build(self, seed: int) -> RenewalSpec:
        weights = self.mark_weights or [1.0 / len(self.marks)] * len(self.marks)
        return RenewalSpec(self.inter_arrival.build(), MarkSpace(tuple(self.marks)), tuple(weights), seed)


class ConstantField(_Strict):
    kind: Literal["constant"] = "constant"
    value: float = 0.0


class ExpressionField(_Strict):
    kind: Literal["expression"]
    expr: str


class GeneratorField(_Strict):
    kind: Literal["generator"]
    name: Literal["random_smooth", "random_monotone", "random_uniform", "checkerboard", "bump"]
    params: dict[str, Union[float, int]] = Field(default_factory=dict)


class CsvField(_Strict):
    kind: Literal["csv"]
    path: str


FieldSpec = Annotated[
    Union[ConstantField, ExpressionField, GeneratorField, CsvField], Field(discriminator="kind")
]


class ConstantDrift(_Strict):
    kind: Literal["constant"] = "constant"
    field: FieldSpec = ConstantField()


class PerMarkDrift(_Strict):
    kind: Literal["per_mark"]
    table: dict[str, FieldSpec]


class ExpressionDrift(_Strict):
    """Drift given by one expression in the cell variables and the atom time ``t``."""

    kind: Literal["expression"]
    expr: str


DriftSpec = Annotated[Union[ConstantDrift, PerMarkDrift, ExpressionDrift], Field(discriminator="kind")]


class EvolveSpec(_Strict):
    steps_per_unit_time: int = Field(default=16, ge=1)
    resolvent_tol: float = Field(default=1e-10, gt=0)
    max_newton_iters: int = Field(default=100, ge=1)

    def build(self) -> EvolveConfig:
        return EvolveConfig(self.steps_per_unit_time, self.resolvent_tol, self.max_newton_iters)


class VerifySpec(_Strict):
    trials: int = Field(default=50, ge=1)
    ratio_trials: int = Field(default=20, ge=1)
    decay_trials: int = Field(default=20, ge=1)
    mild_trials: int = Field(default=4, ge=1)
    counting_trials: int = Field(default=100, ge=1)
    poisson_paths: int = Field(default=10_000, ge=10)
    grids: list[list[int]] = Field(default=[[64], [16, 16]], min_length=1)
    p_values: list[float] = Field(default=[1.5, 3.0, 4.0], min_length=1)
    weight: Literal["constant", "checkerboard", "bump"] = "bump"
    horizon: float = Field(default=2.0, gt=0)
    rate: float = Field(default=2.0, gt=0)
    lambdas: list[float] = Field(default=[0.01, 0.1, 1.0], min_length=1)
    decay_times: list[float] = Field(default=[0.1, 0.5, 1.0], min_length=1)
    defect_steps: int = Field(default=64, ge=2)
    quantizer_orders: list[int] = Field(default=[4, 16, 64, 256], min_length=2)
    quantizer_amplitude: float = Field(default=2.0, gt=0)


class RunConfig(_Strict):
    mode: Literal["simulate", "verify", "sweep"] | None = None
    grid: GridSpec = GridSpec()
    p: float = 3.0
    weight: WeightSpec = WeightSpec()
    renewal: RenewalConfig = RenewalConfig()
    drift: DriftSpec = ConstantDrift()
    initial: FieldSpec = ConstantField()
    horizon: float = Field(default=3.5, gt=0)
    query_step: float | None = Field(default=None, gt=0)
    evolve: EvolveSpec = EvolveSpec()
    verify: VerifySpec = VerifySpec()
    output: str = "runs"
    seed: int = Field(default=0, ge=0, lt=2 ** 64)

    @field_validator("p")
    @classmethod
    def _exponent(cls, p):
        try:
            check_exponent(p)
        except ConfigError as exc:
            raise ValueError(str(exc)) from None
        return p

    # builders ---------------------------------------------------------

    def canonical(self) -> dict:
        return self.model_dump(mode="json")

    def content_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def build_grid(self) -> GridDomain:
        return self.grid.build()

    def build_operator(self) -> PLaplacian:
        grid = self.build_grid()
        return PLaplacian.build(grid, self.p, self.weight.build(grid))

    def build_renewal(self) -> RenewalSpec:
        return self.renewal.build(self.seed)

    def build_initial(self, grid: GridDomain) -> StateField:
        rng = np.random.default_rng([self.seed, 1])
        return StateField(grid, _field_values(grid, self.initial, rng, "initial"))

    def build_drift(self, grid: GridDomain) -> DriftFunction:
        rng = np.random.default_rng([self.seed, 2])
        spec = self.drift
        if isinstance(spec, ConstantDrift):
            return DriftFunction.constant(StateField(grid, _field_values(grid, spec.field, rng, "drift.field")))
        if isinstance(spec, PerMarkDrift):
            marks = {str(m): m for m in self.renewal.marks}
            unknown = sorted(set(spec.table) - set(marks))
            missing = sorted(set(marks) - set(spec.table))
            if unknown or missing:
                raise ConfigError(f"drift.table: keys must match renewal.marks (missing {missing}, unknown {unknown})")
            return DriftFunction.per_mark({
                marks[k]: StateField(grid, _field_values(grid, v, rng, f"drift.table.{k}"))
                for k, v in sorted(spec.table.items())
            })
        expr = fields.Expression(spec.expr, set(fields.cell_variables(grid)) | {"t"})
        env = fields.cell_variables(grid)

        def ev(t, z):
            values = np.broadcast_to(np.asarray(expr({**env, "t": t}), dtype=float), grid.shape)
            return StateField(grid, np.array(values))

        return DriftFunction(ev, name=f"expression {spec.expr!r}")

    def build_evolve(self) -> EvolveConfig:
        return self.evolve.build()

    def build_suite(self) -> SuiteConfig:
        v = self.verify
        return SuiteConfig(
            trials=v.trials,
            ratio_trials=v.ratio_trials,
            decay_trials=v.decay_trials,
            mild_trials=v.mild_trials,
            counting_trials=v.counting_trials,
            poisson_paths=v.poisson_paths,
            grids=tuple(tuple(g) for g in v.grids),
            p_values=tuple(v.p_values),
            seed=self.seed,
            weight=v.weight,
            horizon=v.horizon,
            rate=v.rate,
            evolve=self.build_evolve(),
            lambdas=tuple(v.lambdas),
            decay_times=tuple(v.decay_times),
            defect_steps=v.defect_steps,
            quantizer_orders=tuple(v.quantizer_orders),
            quantizer_amplitude=v.quantizer_amplitude,
        )

    def query_times(self) -> list:
        step = self.query_step or self.horizon / 16
        n = int(math.floor(self.horizon / step + 1e-9))
        return sorted({min(k * step, self.horizon) for k in range(n + 1)} | {self.horizon})


def _named_field(grid, name, params, where) -> np.ndarray:
    try:
        if name == "constant":
            return fields.constant(grid, **params)
        if name == "checkerboard":
            return fields.checkerboard(grid, **params)
        if name == "bump":
            return fields.bump(grid, **params)
        if name == "expression":
            if set(params) != {"expr"}:
                raise ConfigError(f"{where}: expression needs exactly the parameter 'expr'")
            return fields.expression_values(grid, str(params["expr"]))
    except TypeError as exc:
        raise ConfigError(f"{where}: bad parameters for {name}: {exc}") from None
    raise ConfigError(f"{where}: unknown generator {name!r}")


def _field_values(grid, spec, rng, where) -> np.ndarray:
    if isinstance(spec, ConstantField):
        return fields.constant(grid, spec.value)
    if isinstance(spec, ExpressionField):
        return fields.expression_values(grid, spec.expr)
    if isinstance(spec, CsvField):
        return fields.read_cell_csv(spec.path, grid)
    if spec.name in ("checkerboard", "bump"):
        return _named_field(grid, spec.name, spec.params, where)
    fn = {
        "random_smooth": fields.random_smooth,
        "random_monotone": fields.random_monotone,
        "random_uniform": fields.random_uniform,
    }[spec.name]
    try:
        return fn(grid, rng, **spec.params)
    except TypeError as exc:
        raise ConfigError(f"{where}: bad parameters for {spec.name}: {exc}") from None


# parsing with diagnostics --------------------------------------------


def _line_of(text: str, loc: tuple) -> int | None:
    """Best-effort line number of the innermost string key in ``loc``."""
    keys = [k for k in loc if isinstance(k, str)]
    start = 0
    line = None
    lines = text.splitlines()
    for key in keys:
        pattern = re.compile(r'"' + re.escape(key) + r'"\s*:')
        for i in range(start, len(lines)):
            if pattern.search(lines[i]):
                line = i + 1
                start = i
                break
    return line


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}:1: config must be a JSON object")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        msgs = []
        for err in exc.errors():
            loc = tuple(err["loc"])
            field = ".".join(str(k) for k in loc) or "<root>"
            line = _line_of(text, loc)
            where = f"{source}:{line}" if line else source
            msgs.append(f"{where}: {field}: {err['msg']}")
        raise ConfigError("\n".join(msgs)) from None
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path))

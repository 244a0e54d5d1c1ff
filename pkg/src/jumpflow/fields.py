"""Named generators and CSV input/output for cell and face data.

Generators are selected by name from the run configuration; each returns a
plain array over the cells of a grid.  Expressions are evaluated by a small
whitelisted interpreter over the cell coordinates, never by ``eval``.
"""

from __future__ import annotations

import ast
import csv
import math
import operator
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError
from .grid import GridDomain, StateField, as_grid_values

_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "tanh": np.tanh,
    "minimum": np.minimum,
    "maximum": np.maximum,
    "where": np.where,
}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.Mod: operator.mod,
}
_CMPOPS = {
    ast.Lt: operator.lt,
    ast.LtE: operator.le,
    ast.Gt: operator.gt,
    ast.GtE: operator.ge,
}


class Expression:
    """Arithmetic expression over named variables, checked once at parse time.

    >>> Expression("sin(pi * x) + 2 * t", {"x", "t"})({"x": 0.5, "t": 1.0})
    3.0
    """

    def __init__(self, source: str, variables):
        self.source = source
        self.variables = frozenset(variables)
        try:
            tree = ast.parse(source, mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse expression {source!r}: {exc.msg}") from None
        self._tree = tree.body
        self._validate(self._tree)

    def _validate(self, node):
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ConfigError(f"unsupported literal {node.value!r} in {self.source!r}")
        elif isinstance(node, ast.Name):
            if node.id not in self.variables and node.id not in _CONSTS:
                raise ConfigError(
                    f"unknown name {node.id!r} in {self.source!r}; "
                    f"allowed: {sorted(self.variables | set(_CONSTS))}"
                )
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ConfigError(f"operator {type(node.op).__name__} not allowed in {self.source!r}")
            self._validate(node.left)
            self._validate(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.USub, ast.UAdd)):
                raise ConfigError(f"unary {type(node.op).__name__} not allowed in {self.source!r}")
            self._validate(node.operand)
        elif isinstance(node, ast.Compare):
            if any(type(op) not in _CMPOPS for op in node.ops):
                raise ConfigError(f"comparison not allowed in {self.source!r}")
            self._validate(node.left)
            for c in node.comparators:
                self._validate(c)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
                raise ConfigError(f"function call not allowed in {self.source!r}; allowed: {sorted(_FUNCS)}")
            if node.keywords:
                raise ConfigError(f"keyword arguments not allowed in {self.source!r}")
            for a in node.args:
                self._validate(a)
        else:
            raise ConfigError(f"syntax {type(node).__name__} not allowed in {self.source!r}")

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else _CONSTS[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Compare):
            left = self._eval(node.left, env)
            out = True
            for op, c in zip(node.ops, node.comparators):
                right = self._eval(c, env)
                out = np.logical_and(out, _CMPOPS[type(op)](left, right))
                left = right
            return np.asarray(out, dtype=float)
        args = [self._eval(a, env) for a in node.args]
        return _FUNCS[node.func.id](*args)

    def __call__(self, env: dict):
        missing = self.variables - set(env)
        if missing:
            raise ConfigError(f"expression {self.source!r} needs values for {sorted(missing)}")
        with np.errstate(all="ignore"):
            return self._eval(self._tree, env)


def cell_variables(grid: GridDomain) -> dict:
    """Coordinates ``x`` (and ``y``) and integer indices ``i`` (and ``j``) of every cell."""
    centres = grid.cell_centers()
    idx = np.meshgrid(*[np.arange(n, dtype=float) for n in grid.shape], indexing="ij")
    env = {"x": centres[0], "i": idx[0]}
    if grid.dim == 2:
        env.update(y=centres[1], j=idx[1])
    return env


def expression_values(grid: GridDomain, source: str, extra: dict | None = None) -> np.ndarray:
    env = cell_variables(grid)
    env.update(extra or {})
    values = np.broadcast_to(np.asarray(Expression(source, env)(env), dtype=float), grid.shape)
    if not np.all(np.isfinite(values)):
        raise ConfigError(f"expression {source!r} produced non-finite values on the grid")
    return np.array(values)


def constant(grid: GridDomain, value: float = 1.0) -> np.ndarray:
    return np.full(grid.shape, float(value))


def checkerboard(grid: GridDomain, low: float = 1.0, high: float = 2.0, block: int = 1) -> np.ndarray:
    """Alternating ``low``/``high`` blocks of ``block`` cells per axis."""
    if block < 1:
        raise ConfigError("checkerboard block must be >= 1")
    idx = np.meshgrid(*[np.arange(n) // block for n in grid.shape], indexing="ij")
    parity = sum(idx) % 2
    return np.where(parity == 0, float(low), float(high))


def bump(grid: GridDomain, base: float = 1.0, height: float = 1.0, width: float = 0.25) -> np.ndarray:
    """``base + height * exp(-|x - c|^2 / (2 width^2))`` centred in the domain."""
    if width <= 0:
        raise ConfigError("bump width must be positive")
    centres = grid.cell_centers()
    r2 = sum((c - 0.5 * n * grid.h) ** 2 for c, n in zip(centres, grid.shape))
    return float(base) + float(height) * np.exp(-r2 / (2 * width ** 2))


def random_smooth(grid: GridDomain, rng: np.random.Generator, modes: int = 3, amplitude: float = 1.0) -> np.ndarray:
    """Sum of low cosine modes with uniform random coefficients, scaled to sup norm ``amplitude``."""
    centres = grid.cell_centers()
    lengths = [n * grid.h for n in grid.shape]
    vals = np.zeros(grid.shape)
    for c, length in zip(centres, lengths):
        for k in range(1, modes + 1):
            vals = vals + rng.uniform(-1, 1) * np.cos(np.pi * k * c / length)
    vals = vals + rng.uniform(-1, 1)
    peak = float(np.max(np.abs(vals)))
    return vals * (amplitude / peak) if peak > 0 else vals


def random_monotone(grid: GridDomain, rng: np.random.Generator, amplitude: float = 1.0) -> np.ndarray:
    """Random profile strictly increasing along every axis, with sup norm ``amplitude``.

    No interior face difference vanishes, so the operator stays away from
    its degenerate (``p > 2``) or singular (``p < 2``) points along the flow.
    """
    centres = grid.cell_centers()
    lengths = [n * grid.h for n in grid.shape]
    vals = np.zeros(grid.shape)
    for c, length in zip(centres, lengths):
        s = c / length
        slope = rng.uniform(0.5, 1.0)
        # perturbation slopes stay below 0.5 * slope, keeping the profile monotone
        for k in range(1, 4):
            coef = rng.uniform(-1, 1) * slope / (2 * math.pi * k * 3)
            vals = vals + coef * np.sin(math.pi * k * s)
        vals = vals + slope * (s - 0.5)
    vals = vals + rng.uniform(-0.25, 0.25)
    peak = float(np.max(np.abs(vals)))
    return vals * (amplitude / peak)


def random_uniform(grid: GridDomain, rng: np.random.Generator, low: float = -1.0, high: float = 1.0) -> np.ndarray:
    return rng.uniform(low, high, size=grid.shape)


# CSV ------------------------------------------------------------------

def format_float(x: float) -> str:
    """Decimal representation with 17 significant digits (round-trips doubles)."""
    return format(float(x), ".17g")


def read_cell_csv(path, grid: GridDomain) -> np.ndarray:
    """Read one value per cell in row-major order; a header row is optional."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            cell = row[-1].strip()
            try:
                rows.append(float(cell))
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise ConfigError(f"{path}:{lineno}: not a number: {cell!r}") from None
    try:
        return as_grid_values(grid, rows)
    except DomainError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def write_cell_csv(path, field: StateField, header: str = "value") -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["cell", header])
        for k, v in enumerate(field.values.ravel()):
            w.writerow([k, format_float(v)])

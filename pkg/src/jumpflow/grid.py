"""Rectangular cell grids and the discrete L^1 state space living on them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, NumericError


@dataclass(frozen=True)
class GridDomain:
    """Uniform 1D/2D cell grid with square cells of side ``h``.

    Stands in for a bounded domain with its Lebesgue measure: every cell
    carries mass ``h**dim``.
    """

    shape: tuple[int, ...]
    h: float

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "h", float(self.h))
        if len(shape) not in (1, 2):
            raise DomainError(f"grid dimension must be 1 or 2, got {len(shape)}")
        if any(n < 2 for n in shape):
            raise DomainError(f"need at least 2 cells per axis, got {shape}")
        if not (self.h > 0 and np.isfinite(self.h)):
            raise DomainError(f"cell size must be positive, got {self.h}")

    @classmethod
    def unit(cls, *cells: int) -> "GridDomain":
        """Grid with ``h = 1 / cells[0]`` (unit interval or square).

        Cells stay square, so a non-square rectangle is longer than 1 along
        its second axis.
        """
        return cls(tuple(cells), 1.0 / cells[0])

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @property
    def measure(self) -> float:
        """Total measure of the domain, ``h**dim * #cells``."""
        return self.cell_volume * self.size

    def face_shapes(self) -> list[tuple[int, ...]]:
        """Shapes of the interior-face arrays, one per axis."""
        out = []
        for axis in range(self.dim):
            s = list(self.shape)
            s[axis] -= 1
            out.append(tuple(s))
        return out

    @property
    def n_faces(self) -> int:
        return sum(int(np.prod(s)) for s in self.face_shapes())

    def cell_centers(self) -> list[np.ndarray]:
        """Coordinate arrays (``indexing='ij'``) of the cell centres."""
        axes = [(np.arange(n) + 0.5) * self.h for n in self.shape]
        return list(np.meshgrid(*axes, indexing="ij"))

    def to_dict(self) -> dict:
        return {"shape": list(self.shape), "h": self.h}


class StateField:
    """One real value per cell: a discrete element of L^1 over the grid.

    Supports ``+``, ``-`` and scalar multiplication; values are copied on
    construction and never mutated afterwards.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: GridDomain, values):
        arr = np.array(values, dtype=float)
        if arr.shape != grid.shape:
            try:
                arr = arr.reshape(grid.shape)
            except ValueError:
                raise DomainError(
                    f"field of shape {np.shape(values)} does not fit grid {grid.shape}"
                ) from None
        if not np.all(np.isfinite(arr)):
            raise NumericError("state field contains non-finite values")
        arr.setflags(write=False)
        self.grid = grid
        self.values = arr

    @classmethod
    def constant(cls, grid: GridDomain, c: float) -> "StateField":
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def zeros(cls, grid: GridDomain) -> "StateField":
        return cls.constant(grid, 0.0)

    def _check(self, other: "StateField"):
        if other.grid != self.grid:
            raise DomainError(f"grid mismatch: {self.grid} vs {other.grid}")

    def __add__(self, other):
        if isinstance(other, StateField):
            self._check(other)
            return StateField(self.grid, self.values + other.values)
        return StateField(self.grid, self.values + float(other))

    def __sub__(self, other):
        if isinstance(other, StateField):
            self._check(other)
            return StateField(self.grid, self.values - other.values)
        return StateField(self.grid, self.values - float(other))

    def __mul__(self, c):
        return StateField(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return StateField(self.grid, -self.values)

    def __eq__(self, other):
        return (
            isinstance(other, StateField)
            and other.grid == self.grid
            and np.array_equal(other.values, self.values)
        )

    __hash__ = None

    def __repr__(self):
        return f"StateField(grid={self.grid.shape}, mean={self.mean():.6g})"

    # norms -------------------------------------------------------------
    def norm1(self) -> float:
        return self.grid.cell_volume * float(np.sum(np.abs(self.values)))

    def norm2(self) -> float:
        return float(np.sqrt(self.grid.cell_volume * np.sum(self.values ** 2)))

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.values)))

    def norm(self, q) -> float:
        if q == 1:
            return self.norm1()
        if q == 2:
            return self.norm2()
        if q in (np.inf, "inf"):
            return self.norm_inf()
        q = float(q)
        return float((self.grid.cell_volume * np.sum(np.abs(self.values) ** q)) ** (1 / q))

    def mean(self) -> float:
        return float(np.mean(self.values))

    def pairing(self, other: "StateField") -> float:
        """Discrete duality ``<self, other> = h^dim sum_i self_i other_i``."""
        self._check(other)
        return self.grid.cell_volume * float(np.sum(self.values * other.values))

    def is_constant(self) -> bool:
        v = self.values
        return bool(np.all(v == v.flat[0]))


def distance1(a: StateField, b: StateField) -> float:
    """L^1 distance without materialising the difference as a StateField."""
    a._check(b)
    return a.grid.cell_volume * float(np.sum(np.abs(a.values - b.values)))


def as_grid_values(grid: GridDomain, values: Sequence[float]) -> np.ndarray:
    """Reshape row-major cell values onto ``grid``."""
    arr = np.asarray(values, dtype=float)
    if arr.size != grid.size:
        raise DomainError(f"expected {grid.size} cell values, got {arr.size}")
    return arr.reshape(grid.shape)

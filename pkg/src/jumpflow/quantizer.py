"""Enumerated dense family of block fields and its nearest-point quantizers.

Members are piecewise-constant fields on dyadic block partitions: at level
``k`` every axis is split into ``min(2**k, cells)`` nearly equal blocks and
each block carries a coefficient ``j / 2**k`` with ``|j / 2**k| <= amplitude``.
Levels are visited in order.  Within a level, coefficient vectors are
ordered by ``sum |j|``, then lexicographically, and positive signs come
before negative ones.  A member equal to an earlier one is skipped.  The
union over all levels is dense in the sup-ball of radius ``amplitude``
(for the L^1 distance).

``quantize(n, v)`` returns the member among the first ``n`` that is nearest
to ``v`` in L^1, taking the lowest index on ties.
"""

from __future__ import annotations

import itertools
from typing import Iterator

import numpy as np

from .errors import ConfigError, DomainError
from .grid import GridDomain, StateField


def _compositions(total: int, parts: int, cap: int) -> Iterator[tuple]:
    """Non-negative integer vectors of length ``parts`` summing to ``total``, each ``<= cap``."""
    if parts == 1:
        if total <= cap:
            yield (total,)
        return
    for first in range(min(total, cap), -1, -1):
        for rest in _compositions(total - first, parts - 1, cap):
            yield (first,) + rest


class DenseQuantizer:
    def __init__(self, grid: GridDomain, amplitude: float = 2.0):
        if not amplitude > 0:
            raise ConfigError(f"quantizer amplitude must be positive, got {amplitude}")
        self.grid = grid
        self.amplitude = float(amplitude)
        self._members: list[np.ndarray] = []
        self._seen: set[bytes] = set()
        self._source = self._enumerate()

    def _block_index(self, level: int) -> tuple[np.ndarray, int]:
        """Block label of each cell and the number of blocks at ``level``."""
        labels = np.zeros(self.grid.shape, dtype=int)
        count = 1
        for axis, n in enumerate(self.grid.shape):
            nb = min(2 ** level, n)
            # cell c belongs to block floor(c * nb / n)
            along = (np.arange(n) * nb) // n
            shape = [1] * self.grid.dim
            shape[axis] = n
            labels = labels * nb + along.reshape(shape)
            count *= nb
        return labels, count

    def _enumerate(self) -> Iterator[np.ndarray]:
        for level in itertools.count():
            labels, nblocks = self._block_index(level)
            scale = 2 ** level
            cap = int(np.floor(self.amplitude * scale))
            for total in range(cap * nblocks + 1):
                for mags in _compositions(total, nblocks, cap):
                    nonzero = [b for b, m in enumerate(mags) if m]
                    for signs in itertools.product((1, -1), repeat=len(nonzero)):
                        coef = np.zeros(nblocks)
                        for b, s in zip(nonzero, signs):
                            coef[b] = s * mags[b] / scale
                        yield coef[labels]

    def _extend(self, n: int) -> None:
        while len(self._members) < n:
            cand = next(self._source)
            key = cand.tobytes()
            if key in self._seen:
                continue
            self._seen.add(key)
            cand.setflags(write=False)
            self._members.append(cand)

    def member(self, k: int) -> StateField:
        """The ``k``-th member, counting from 1."""
        if k < 1:
            raise DomainError(f"member index must be >= 1, got {k}")
        self._extend(k)
        return StateField(self.grid, self._members[k - 1])

    def members(self, n: int) -> np.ndarray:
        self._extend(n)
        return np.stack(self._members[:n])

    def nearest_index(self, n: int, v: StateField) -> int:
        """1-based index of the nearest member among the first ``n``."""
        if n < 1:
            raise DomainError(f"quantizer order must be >= 1, got {n}")
        if v.grid != self.grid:
            raise DomainError(f"state lives on {v.grid}, quantizer on {self.grid}")
        axes = tuple(range(1, self.grid.dim + 1))
        dist = np.sum(np.abs(self.members(n) - v.values), axis=axes)
        # argmin returns the first minimiser, i.e. the lowest index on ties
        return int(np.argmin(dist)) + 1

    def quantize(self, n: int, v: StateField) -> StateField:
        return self.member(self.nearest_index(n, v))


def quantize(q: DenseQuantizer, n: int, v: StateField) -> StateField:
    return q.quantize(n, v)

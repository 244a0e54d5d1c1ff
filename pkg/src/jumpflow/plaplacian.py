"""Finite-volume weighted p-Laplacian with zero-flux (Neumann) boundary.

For a state ``u`` on a :class:`~jumpflow.grid.GridDomain` the interior face
differences are ``D_f u = (u_R - u_L) / h`` and the face fluxes are
``F_f = gamma_f * |D_f u|**(p-2) * D_f u``.  The operator is the negative
discrete divergence of these fluxes,

    (A_h u)_i = -(1/h) * sum_{faces f of i} s_{i,f} F_f,

with boundary faces carrying no flux.  ``A_h`` is the gradient of the
Dirichlet energy ``E(u) = h^dim sum_f gamma_f |D_f u|^p / p`` with respect to
the cell-weighted inner product, which makes discrete integration by parts
exact and lets the resolvent be computed as a strictly convex minimisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from .errors import ConfigError, DomainError, SolverError
from .grid import GridDomain, StateField

#: Regularisation of ``|d|^2`` inside the Newton Jacobian (never in residuals).
JACOBIAN_EPS = 1e-10


class WeightField:
    """Positive weight on interior faces, one array per axis."""

    def __init__(self, grid: GridDomain, faces):
        faces = [np.array(a, dtype=float) for a in faces]
        shapes = grid.face_shapes()
        if len(faces) != grid.dim or any(a.shape != s for a, s in zip(faces, shapes)):
            raise DomainError(
                f"weight faces {[a.shape for a in faces]} do not match grid faces {shapes}"
            )
        for a in faces:
            a.setflags(write=False)
        flat = np.concatenate([a.ravel() for a in faces])
        if not np.all(np.isfinite(flat)):
            raise ConfigError("weight field contains non-finite values")
        self.grid = grid
        self.faces = tuple(faces)
        self.gamma_min = float(flat.min())
        self.gamma_max = float(flat.max())
        if not self.gamma_min > 0:
            raise ConfigError(f"weight must be bounded below by a positive constant, min={self.gamma_min}")

    @classmethod
    def constant(cls, grid: GridDomain, value: float = 1.0) -> "WeightField":
        return cls(grid, [np.full(s, float(value)) for s in grid.face_shapes()])

    @classmethod
    def from_cells(cls, grid: GridDomain, cell_values) -> "WeightField":
        """Harmonic average of a cell-centred weight onto the faces."""
        c = np.asarray(cell_values, dtype=float).reshape(grid.shape)
        if not np.all(c > 0):
            raise ConfigError("cell weights must be strictly positive")
        faces = []
        for axis in range(grid.dim):
            lo = np.take(c, np.arange(grid.shape[axis] - 1), axis=axis)
            hi = np.take(c, np.arange(1, grid.shape[axis]), axis=axis)
            faces.append(2.0 * lo * hi / (lo + hi))
        return cls(grid, faces)

    def __eq__(self, other):
        return (
            isinstance(other, WeightField)
            and other.grid == self.grid
            and all(np.array_equal(a, b) for a, b in zip(self.faces, other.faces))
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PLaplaceParams:
    p: float
    gamma: WeightField
    grid: GridDomain = field(default=None)

    def __post_init__(self):
        if self.grid is None:
            object.__setattr__(self, "grid", self.gamma.grid)
        p = float(self.p)
        object.__setattr__(self, "p", p)
        check_exponent(p)
        if self.gamma.grid != self.grid:
            raise DomainError("weight field and parameter grid differ")


def check_exponent(p: float) -> None:
    """Reject exponents outside ``(1, inf) minus {2}``."""
    if not (math.isfinite(p) and p > 1.0):
        raise ConfigError(f"p must lie in (1, inf) without 2; got p={p}")
    if p == 2.0:
        raise ConfigError(
            "p = 2 is excluded: the exponent must lie in (1, inf) without 2 "
            "(the generator decay bound divides by |p - 2|)"
        )


# ---------------------------------------------------------------------------
# array kernels (operate on raw ndarrays shaped like the grid)


def _face_differences(grid: GridDomain, u: np.ndarray) -> list[np.ndarray]:
    return [np.diff(u, axis=a) / grid.h for a in range(grid.dim)]


def _flux_fn(d: np.ndarray, p: float) -> np.ndarray:
    # |d|^(p-2) d, continuously extended by 0 at d = 0
    # overflow surfaces as a NumericError when the result is wrapped in a StateField
    with np.errstate(over="ignore"):
        return np.sign(d) * np.abs(d) ** (p - 1.0)


def _axis_slices(dim: int, axis: int) -> tuple[tuple, tuple]:
    lo = [slice(None)] * dim
    hi = [slice(None)] * dim
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    return tuple(lo), tuple(hi)


def _neg_divergence(grid: GridDomain, fluxes: list[np.ndarray]) -> np.ndarray:
    # a face flux leaves the cell on its low side and enters the one on its high side
    out = np.zeros(grid.shape)
    for axis, flux in enumerate(fluxes):
        lo, hi = _axis_slices(grid.dim, axis)
        out[lo] -= flux
        out[hi] += flux
    return out / grid.h


def _face_to_cells(grid: GridDomain, face_vals: list[np.ndarray]) -> np.ndarray:
    """Sum over the faces adjacent to each cell."""
    out = np.zeros(grid.shape)
    for axis, vals in enumerate(face_vals):
        lo, hi = _axis_slices(grid.dim, axis)
        out[lo] += vals
        out[hi] += vals
    return out


def _apply(params: PLaplaceParams, u: np.ndarray) -> np.ndarray:
    diffs = _face_differences(params.grid, u)
    fluxes = [g * _flux_fn(d, params.p) for g, d in zip(params.gamma.faces, diffs)]
    return _neg_divergence(params.grid, fluxes)


def _energy(params: PLaplaceParams, u: np.ndarray) -> float:
    p = params.p
    total = 0.0
    for g, d in zip(params.gamma.faces, _face_differences(params.grid, u)):
        total += float(np.sum(g * np.abs(d) ** p))
    return params.grid.cell_volume * total / p


def _check_grid(params: PLaplaceParams, u: StateField) -> None:
    if u.grid != params.grid:
        raise DomainError(f"state lives on {u.grid}, operator on {params.grid}")


# ---------------------------------------------------------------------------
# public operations


def apply_operator(params: PLaplaceParams, u: StateField) -> StateField:
    """Return ``A_h u``."""
    _check_grid(params, u)
    return StateField(params.grid, _apply(params, u.values))


def weak_pairing(params: PLaplaceParams, u: StateField, phi: StateField) -> float:
    """Discrete ``int gamma |grad u|^(p-2) grad u . grad phi``."""
    _check_grid(params, u)
    _check_grid(params, phi)
    total = 0.0
    du = _face_differences(params.grid, u.values)
    dphi = _face_differences(params.grid, phi.values)
    for g, a, b in zip(params.gamma.faces, du, dphi):
        total += float(np.sum(g * _flux_fn(a, params.p) * b))
    return params.grid.cell_volume * total


def dirichlet_energy(params: PLaplaceParams, u: StateField) -> float:
    _check_grid(params, u)
    return _energy(params, u.values)


@dataclass
class ResolventInfo:
    iterations: int
    residual: float
    tolerance: float
    trace: list = field(default_factory=list)
    fallback_steps: int = 0


class _HessianBands:
    """Banded storage of ``I + lam * G^T diag(w) G`` for ``solveh_banded``."""

    def __init__(self, grid: GridDomain):
        self.grid = grid
        self.n = grid.size
        # flat-index offset of the neighbour across an axis-a face
        self.offsets = [int(np.prod(grid.shape[a + 1:])) for a in range(grid.dim)]
        self.bandwidth = max(self.offsets)
        idx = np.arange(self.n).reshape(grid.shape)
        self.lo_index = [
            np.take(idx, np.arange(grid.shape[a] - 1), axis=a).ravel() for a in range(grid.dim)
        ]

    def build(self, face_w: list[np.ndarray]) -> np.ndarray:
        bw = self.bandwidth
        ab = np.zeros((bw + 1, self.n))
        ab[bw, :] = 1.0
        for a, w in enumerate(face_w):
            w = w.ravel()
            lo = self.lo_index[a]
            off = self.offsets[a]
            np.add.at(ab[bw], lo, w)
            np.add.at(ab[bw], lo + off, w)
            # upper form: ab[bw - off, j] = H[j - off, j]
            ab[bw - off, lo + off] -= w
        return ab


_BANDS_CACHE: dict = {}


def _bands(grid: GridDomain) -> _HessianBands:
    b = _BANDS_CACHE.get(grid)
    if b is None:
        b = _BANDS_CACHE[grid] = _HessianBands(grid)
    return b


def _rounding_floor(params, u, f, lam, diffs):
    """Smallest residual level resolvable in double precision.

    Two contributions: rounding in evaluating ``u - f + lam A u`` itself, and
    the response of ``lam A`` to rounding-level perturbations of ``u`` (large
    for ``p < 2`` where the flux slope ``|d|^(p-2)`` blows up at small ``d``).
    """
    eps = np.finfo(float).eps
    grid = params.grid
    p = params.p
    umag = float(max(np.max(np.abs(u)), np.max(np.abs(f))))
    if umag == 0:
        return 0.0
    dmin = eps * umag / grid.h
    div = _face_to_cells(grid, [g * np.abs(d) ** (p - 1.0) for g, d in zip(params.gamma.faces, diffs)])
    sens = _face_to_cells(
        grid,
        [g * (p - 1.0) * np.maximum(np.abs(d), dmin) ** (p - 2.0) for g, d in zip(params.gamma.faces, diffs)],
    )
    evaluation = float(np.max(np.abs(u) + np.abs(f) + lam * div / grid.h))
    response = umag * float(np.max(lam * sens / grid.h ** 2))
    return 32.0 * eps * (evaluation + response)


def resolvent_solve(
    params: PLaplaceParams,
    lam: float,
    f: StateField,
    tol: float = 1e-10,
    max_iter: int = 100,
    return_info: bool = False,
):
    """Solve ``u + lam * A_h u = f``.

    ``u`` is the unique minimiser of ``0.5 h^dim |u - f|^2 + lam * E(u)``.
    For ``p > 2`` this energy is minimised directly by damped Newton with
    Armijo backtracking.  For ``p < 2`` the flux ``|d|^(p-2) d`` has an
    infinite slope at 0 and primal Newton crawls, so the same damped Newton
    runs on the dual problem in the face fluxes, whose constitutive law
    ``|s|^(1/(p-1)-1) s`` is continuously differentiable.

    Iteration stops once ``max|u + lam A_h u - f| <= tol``.  When ``tol`` is
    below what double precision can resolve for the data at hand, the
    stopping level is raised to a rounding floor and reported in the info.
    """
    _check_grid(params, f)
    if not (lam > 0 and math.isfinite(lam)):
        raise DomainError(f"resolvent parameter must be positive, got {lam}")
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    solver = _solve_primal if params.p > 2 else _solve_dual
    u, info = solver(params, float(lam), f.values, tol, max_iter)
    out = StateField(params.grid, u)
    return (out, info) if return_info else out


def _primal_residual(params, u, fv, lam):
    diffs = _face_differences(params.grid, u)
    fluxes = [g * _flux_fn(d, params.p) for g, d in zip(params.gamma.faces, diffs)]
    return u - fv + lam * _neg_divergence(params.grid, fluxes), diffs


def _armijo(merit, x, direction, slope, trace, it, rn):
    j0 = merit(x)
    step = 1.0
    while True:
        cand = x + step * direction
        value = merit(cand)
        if value <= j0 + 1e-4 * step * slope + 1e-14 * abs(j0):
            return cand, step, value
        step *= 0.5
        if step < 1e-14:
            raise SolverError(
                f"line search failed at iteration {it} (residual {rn:.3e})",
                trace=trace,
                residual=rn,
            )


class _Progress:
    """Stopping logic shared by the primal and dual Newton loops.

    Converged once the residual reaches ``tol``.  If it stalls (over
    ``patience`` iterations neither a 10% residual improvement nor a merit
    decrease above rounding level) or the iteration budget runs
    out, the iterate is accepted only when the residual is already at the
    double-precision floor; otherwise a :class:`SolverError` is raised.
    """

    patience = 6

    def __init__(self, tol, max_iter, lam, p):
        self.tol = tol
        self.max_iter = max_iter
        self.lam = lam
        self.p = p
        self.trace = []
        self.best = math.inf
        self.since_best = 0
        self.best_merit = math.inf
        self.stop_level = tol

    def done(self, it, rn, floor, merit=math.inf):
        """``floor`` is a zero-argument callable, evaluated only when needed."""
        if rn <= self.tol:
            return True
        merit_gain = merit < self.best_merit - 1e-12 * abs(merit)
        self.best_merit = min(self.best_merit, merit)
        if rn < 0.9 * self.best or merit_gain:
            self.best = min(self.best, rn)
            self.since_best = 0
        else:
            self.since_best += 1
        stalled = self.since_best >= self.patience
        if stalled or it == self.max_iter:
            self.stop_level = max(self.tol, floor())
            if rn <= self.stop_level:
                return True
            what = "stalled" if stalled else f"did not converge in {self.max_iter} iterations"
            raise SolverError(
                f"resolvent {what} (residual {rn:.3e} > {self.stop_level:.3e}, "
                f"lam={self.lam}, p={self.p})",
                trace=self.trace,
                residual=rn,
            )
        return False

    def record(self, it, rn, step):
        self.trace.append((it, rn, step))


def _bb_direction(x, g, prev, fallback_scale):
    if prev is not None:
        s_vec = x - prev[0]
        y_vec = g - prev[1]
        sy = float(np.sum(s_vec * y_vec))
        alpha = float(np.sum(s_vec * s_vec)) / sy if sy > 0 else fallback_scale
    else:
        alpha = fallback_scale
    return -alpha * g


def _solve_primal(params, lam, fv, tol, max_iter):
    grid = params.grid
    p = params.p
    vol = grid.cell_volume
    bands = _bands(grid)
    u = fv.copy()

    def merit(x):
        return 0.5 * vol * float(np.sum((x - fv) ** 2)) + lam * _energy(params, x)

    r, diffs = _primal_residual(params, u, fv, lam)
    progress = _Progress(tol, max_iter, lam, p)
    fallback = 0
    prev = None
    value = math.inf
    for it in range(max_iter + 1):
        rn = float(np.max(np.abs(r)))
        if progress.done(it, rn, lambda: _rounding_floor(params, u, fv, lam, diffs), value):
            break
        face_w = [
            lam * g * (p - 1.0) * (d * d + JACOBIAN_EPS ** 2) ** ((p - 2.0) / 2.0) / grid.h ** 2
            for g, d in zip(params.gamma.faces, diffs)
        ]
        direction = None
        try:
            ab = bands.build(face_w)
            direction = -linalg.solveh_banded(ab, r.ravel(), lower=False, check_finite=False)
            direction = direction.reshape(grid.shape)
            if not (np.all(np.isfinite(direction)) and np.sum(direction * r) < 0):
                direction = None
        except (linalg.LinAlgError, ValueError):
            direction = None
        if direction is None:
            fallback += 1
            scale = 1.0 / (1.0 + 2 * grid.dim * max(float(np.max(w)) for w in face_w))
            direction = _bb_direction(u, r, prev, scale)
        slope = vol * float(np.sum(r * direction))
        new_u, step, value = _armijo(merit, u, direction, slope, progress.trace, it, rn)
        prev = (u, r)
        u = new_u
        r, diffs = _primal_residual(params, u, fv, lam)
        progress.record(it, rn, step)
    return u, ResolventInfo(len(progress.trace), rn, progress.stop_level, progress.trace, fallback)


class _FaceOperators:
    """Sparse face-difference matrix ``G`` (faces x cells) and ``G G^T``."""

    def __init__(self, grid: GridDomain):
        idx = np.arange(grid.size).reshape(grid.shape)
        rows, cols, vals = [], [], []
        row = 0
        for a in range(grid.dim):
            lo = np.take(idx, np.arange(grid.shape[a] - 1), axis=a).ravel()
            hi = np.take(idx, np.arange(1, grid.shape[a]), axis=a).ravel()
            k = lo.size
            r = np.arange(row, row + k)
            rows += [r, r]
            cols += [lo, hi]
            vals += [np.full(k, -1.0 / grid.h), np.full(k, 1.0 / grid.h)]
            row += k
        self.G = sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(row, grid.size),
        )
        self.GT = self.G.T.tocsr()
        self.GGT = (self.G @ self.GT).tocsc()
        self.n_faces = row


_FACE_OPS_CACHE: dict = {}


def _face_ops(grid: GridDomain) -> _FaceOperators:
    ops = _FACE_OPS_CACHE.get(grid)
    if ops is None:
        ops = _FACE_OPS_CACHE[grid] = _FaceOperators(grid)
    return ops


def _solve_dual(params, lam, fv, tol, max_iter):
    # unknown: face fluxes F; primal state u = f - lam G^T F
    grid = params.grid
    p = params.p
    ops = _face_ops(grid)
    gamma = np.concatenate([g.ravel() for g in params.gamma.faces])
    expo = 1.0 / (p - 1.0)  # inverse flux law psi(s) = |s|^(expo-1) s
    q = expo + 1.0
    f_flat = fv.ravel()
    gf = ops.G @ f_flat

    def primal(F):
        return (f_flat - lam * (ops.GT @ F)).reshape(grid.shape)

    def gradient(F):
        s = F / gamma
        return np.sign(s) * np.abs(s) ** expo - gf + lam * (ops.GGT @ F)

    def merit(F):
        gtf = ops.GT @ F
        return (
            float(np.sum(gamma * np.abs(F / gamma) ** q)) / q
            - float(F @ gf)
            + 0.5 * lam * float(gtf @ gtf)
        )

    F = np.zeros(ops.n_faces)
    u = fv.copy()
    r, diffs = _primal_residual(params, u, fv, lam)
    progress = _Progress(tol, max_iter, lam, p)
    fallback = 0
    prev = None
    value = math.inf
    tikhonov = 1e-12 * lam * 4 * grid.dim / grid.h ** 2
    for it in range(max_iter + 1):
        rn = float(np.max(np.abs(r)))
        if progress.done(it, rn, lambda: _rounding_floor(params, u, fv, lam, diffs), value):
            break
        g = gradient(F)
        s = F / gamma
        curv = expo * (s * s + JACOBIAN_EPS ** 2) ** ((expo - 1.0) / 2.0) / gamma
        hess = (lam * ops.GGT + sparse.diags(curv + tikhonov)).tocsc()
        direction = None
        try:
            direction = -splinalg.spsolve(hess, g)
            if not (np.all(np.isfinite(direction)) and float(direction @ g) < 0):
                direction = None
        except (RuntimeError, ValueError):
            direction = None
        if direction is None:
            fallback += 1
            direction = _bb_direction(F, g, prev, 1.0 / (1.0 + 4 * grid.dim * lam / grid.h ** 2))
        slope = float(g @ direction)
        new_F, step, value = _armijo(merit, F, direction, slope, progress.trace, it, rn)
        prev = (F, g)
        F = new_F
        u = primal(F)
        r, diffs = _primal_residual(params, u, fv, lam)
        progress.record(it, rn, step)
    return u, ResolventInfo(len(progress.trace), rn, progress.stop_level, progress.trace, fallback)


class PLaplacian:
    """The discrete weighted p-Laplacian as an accretive operator.

    Implements the capability expected by :mod:`jumpflow.semigroup`:
    ``grid``, ``apply(u)`` and ``resolvent_solve(lam, f, tol, ...)``.
    """

    def __init__(self, params: PLaplaceParams):
        self.params = params

    @classmethod
    def build(cls, grid: GridDomain, p: float, gamma: WeightField | None = None) -> "PLaplacian":
        gamma = gamma if gamma is not None else WeightField.constant(grid)
        return cls(PLaplaceParams(p, gamma, grid))

    @property
    def grid(self) -> GridDomain:
        return self.params.grid

    @property
    def p(self) -> float:
        return self.params.p

    def apply(self, u: StateField) -> StateField:
        return apply_operator(self.params, u)

    def resolvent_solve(self, lam, f, tol=1e-10, max_iter=100, return_info=False):
        return resolvent_solve(self.params, lam, f, tol, max_iter, return_info)

    def weak_pairing(self, u: StateField, phi: StateField) -> float:
        return weak_pairing(self.params, u, phi)

    def energy(self, u: StateField) -> float:
        return dirichlet_energy(self.params, u)

    def __repr__(self):
        return f"PLaplacian(p={self.p}, grid={self.grid.shape}, h={self.grid.h:g})"

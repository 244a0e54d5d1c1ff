import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jumpflow import ConfigError, GridDomain, PLaplacian, SolverError, StateField, WeightField, distance1
from jumpflow import fields
from jumpflow.plaplacian import check_exponent

from conftest import rough, smooth


# closed-form two-cell oracles (h = 1, unit weight)
TWO = GridDomain((2,), 1.0)


def test_two_cell_operator_oracle():
    # D = 2, flux |D|^{p-2} D = 4 at p = 3, zero-flux boundary: A u = (-4, 4)
    out = PLaplacian.build(TWO, 3.0).apply(StateField(TWO, [0.0, 2.0]))
    np.testing.assert_allclose(out.values, [-4.0, 4.0], rtol=0, atol=1e-14)


@pytest.mark.parametrize(
    "p,a",
    [
        # u = (1 - a, 1 + a) with a + (2a)^{p-1} = 1
        (3.0, (math.sqrt(17) - 1) / 8),
        (1.5, 2 - math.sqrt(3)),
        (4.0, None),
    ],
)
def test_two_cell_resolvent_oracle(p, a):
    if a is None:
        # a + 8 a^3 = 1, solved independently by bisection
        lo, hi = 0.0, 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if mid + 8 * mid ** 3 < 1 else (lo, mid)
        a = lo
    u = PLaplacian.build(TWO, p).resolvent_solve(1.0, StateField(TWO, [0.0, 2.0]), tol=1e-13)
    np.testing.assert_allclose(u.values, [1 - a, 1 + a], atol=1e-10)


@pytest.mark.parametrize("p", [2.0, 1.0, 0.5, math.inf, math.nan])
def test_exponent_rejected(p):
    with pytest.raises(ConfigError):
        check_exponent(p)


def test_p_two_message_names_exclusion():
    with pytest.raises(ConfigError, match="p = 2 is excluded"):
        PLaplacian.build(GridDomain.unit(4), 2.0)


def test_weight_must_be_positive():
    g = GridDomain.unit(4)
    with pytest.raises(ConfigError):
        WeightField.constant(g, 0.0)
    with pytest.raises(ConfigError):
        WeightField.from_cells(g, [1.0, -1.0, 1.0, 1.0])


def test_constants_are_annihilated(op):
    assert op.apply(StateField.constant(op.grid, 3.7)).norm_inf() == 0.0


def test_mass_neutral(op, rng):
    out = op.apply(rough(op.grid, rng))
    assert abs(out.mean()) <= 1e-12 * max(1.0, out.norm_inf())


def test_homogeneity(op, rng):
    u = rough(op.grid, rng)
    for c in (0.3, 2.0, 5.5):
        lhs = op.apply(u * c).values
        rhs = c ** (op.p - 1) * op.apply(u).values
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))


def test_weak_pairing_matches_cell_pairing(op, rng):
    u, phi = rough(op.grid, rng), rough(op.grid, rng)
    assert op.weak_pairing(u, phi) == pytest.approx(phi.pairing(op.apply(u)), rel=1e-12, abs=1e-12)


def test_operator_is_energy_gradient(op, rng):
    # derived oracle: directional derivative of the energy by central differences
    u, w = smooth(op.grid, rng), smooth(op.grid, rng)
    eps = 1e-6
    fd = (op.energy(u + w * eps) - op.energy(u - w * eps)) / (2 * eps)
    assert fd == pytest.approx(w.pairing(op.apply(u)), rel=1e-6, abs=1e-9)


def test_monotone(op, rng):
    u, v = rough(op.grid, rng), rough(op.grid, rng)
    assert (u - v).pairing(op.apply(u) - op.apply(v)) >= -1e-12


@pytest.mark.parametrize("lam", [0.01, 0.1, 1.0])
def test_resolvent_residual_within_tolerance(op, rng, lam):
    f = smooth(op.grid, rng)
    u, info = op.resolvent_solve(lam, f, tol=1e-10, return_info=True)
    residual = np.max(np.abs(u.values + lam * op.apply(u).values - f.values))
    assert residual <= max(info.tolerance, 1e-10) * 1.0001
    assert info.residual == pytest.approx(residual, rel=1e-6, abs=1e-15)


def test_resolvent_preserves_mean_and_constants(op, rng):
    f = rough(op.grid, rng)
    u = op.resolvent_solve(0.5, f)
    assert u.mean() == pytest.approx(f.mean(), abs=1e-9)
    c = StateField.constant(op.grid, -0.25)
    assert op.resolvent_solve(0.5, c) == c


def test_resolvent_failure_carries_trace():
    g = GridDomain.unit(64)
    f = StateField(g, np.random.default_rng(0).uniform(-1, 1, 64))
    with pytest.raises(SolverError) as info:
        PLaplacian.build(g, 3.0).resolvent_solve(1.0, f, tol=1e-10, max_iter=2)
    assert len(info.value.trace) == 2
    assert info.value.residual > 0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), p=st.sampled_from([1.5, 3.0, 4.0]), lam=st.sampled_from([0.01, 0.1, 1.0]))
def test_resolvent_is_l1_contraction(seed, p, lam):
    g = GridDomain.unit(24)
    op = PLaplacian.build(g, p)
    rng = np.random.default_rng(seed)
    f, h = rough(g, rng), rough(g, rng)
    u, v = op.resolvent_solve(lam, f), op.resolvent_solve(lam, h)
    assert distance1(u, v) <= distance1(f, h) + 1e-8


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), p=st.sampled_from([1.5, 3.0, 4.0]))
def test_resolvent_order_preserving(seed, p):
    g = GridDomain.unit(24)
    op = PLaplacian.build(g, p)
    rng = np.random.default_rng(seed)
    f = rng.uniform(-1, 1, 24)
    h = f + rng.uniform(0, 1, 24)
    u = op.resolvent_solve(0.3, StateField(g, f))
    v = op.resolvent_solve(0.3, StateField(g, h))
    assert np.all(u.values <= v.values + 1e-8)

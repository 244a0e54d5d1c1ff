import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from jumpflow import DomainError, GridDomain, StateField, distance1
from jumpflow.grid import as_grid_values


def test_unit_grid_geometry():
    g = GridDomain.unit(16, 8)
    assert g.dim == 2
    assert g.size == 128
    assert g.h == pytest.approx(1 / 16)
    assert g.measure == pytest.approx(0.5)
    assert g.face_shapes() == [(15, 8), (16, 7)]
    assert g.n_faces == 15 * 8 + 16 * 7


@pytest.mark.parametrize("shape,h", [((1,), 0.1), ((4,), 0.0), ((4,), -1.0), ((2, 2, 2), 0.5)])
def test_grid_rejects_bad_geometry(shape, h):
    with pytest.raises(ValueError):
        GridDomain(shape, h)


def test_state_is_read_only():
    s = StateField(GridDomain.unit(4), [1.0, 2.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        s.values[0] = 5.0


def test_state_rejects_non_finite():
    with pytest.raises(Exception):
        StateField(GridDomain.unit(3), [1.0, math.nan, 0.0])


def test_norms_are_measure_weighted():
    g = GridDomain.unit(4)
    s = StateField(g, [1.0, -1.0, 2.0, 0.0])
    assert s.norm1() == pytest.approx(4 * 0.25)
    assert s.norm2() == pytest.approx(math.sqrt(6 * 0.25))
    assert s.norm_inf() == 2.0
    assert s.norm(1) == pytest.approx(s.norm1())
    assert s.norm(math.inf) == s.norm_inf()
    assert s.mean() == pytest.approx(0.5)


def test_constant_distance_is_shift_times_measure():
    g = GridDomain.unit(5, 5)
    a = StateField.constant(g, 0.3)
    assert distance1(a, a + 0.7) == pytest.approx(0.7)


def test_mismatched_grids_rejected():
    with pytest.raises(DomainError):
        StateField.zeros(GridDomain.unit(4)) + StateField.zeros(GridDomain.unit(5))


def test_as_grid_values_checks_length():
    with pytest.raises(DomainError):
        as_grid_values(GridDomain.unit(4), [1.0, 2.0])


@given(arrays(np.float64, 12, elements=st.floats(-1e3, 1e3)), arrays(np.float64, 12, elements=st.floats(-1e3, 1e3)))
def test_distance_is_a_metric(a, b):
    g = GridDomain.unit(12)
    u, v = StateField(g, a), StateField(g, b)
    assert distance1(u, v) == pytest.approx(distance1(v, u))
    assert distance1(u, u) == 0.0
    assert distance1(u, v) <= u.norm1() + v.norm1() + 1e-9

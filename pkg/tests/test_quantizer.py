import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jumpflow import DenseQuantizer, DomainError, GridDomain, StateField, distance1, quantize


def test_first_members_are_level_zero_constants():
    q = DenseQuantizer(GridDomain.unit(8), amplitude=2.0)
    firsts = [q.member(k).values[0] for k in range(1, 6)]
    assert firsts == [0.0, 1.0, -1.0, 2.0, -2.0]
    assert all(q.member(k).is_constant() for k in range(1, 6))


def test_ties_go_to_lowest_index():
    g = GridDomain.unit(8)
    q = DenseQuantizer(g)
    v = StateField.constant(g, -0.5)
    # members 1 (= 0) and 3 (= -1) are both at distance 0.5
    assert q.nearest_index(3, v) == 1
    assert quantize(q, 3, v) == q.member(1)


def test_members_are_distinct_and_bounded():
    q = DenseQuantizer(GridDomain.unit(4, 4), amplitude=1.5)
    m = q.members(300)
    assert len({row.tobytes() for row in m}) == 300
    assert np.max(np.abs(m)) <= 1.5


def test_level_one_splits_into_halves():
    g = GridDomain.unit(6)
    q = DenseQuantizer(g, amplitude=1.0)
    non_constant = next(q.member(k) for k in range(1, 100) if not q.member(k).is_constant())
    vals = non_constant.values
    assert np.all(vals[:3] == vals[0]) and np.all(vals[3:] == vals[3])


def test_invalid_arguments():
    g = GridDomain.unit(4)
    q = DenseQuantizer(g)
    with pytest.raises(DomainError):
        q.member(0)
    with pytest.raises(DomainError):
        q.nearest_index(0, StateField.zeros(g))
    with pytest.raises(DomainError):
        q.nearest_index(3, StateField.zeros(GridDomain.unit(5)))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_gap_non_increasing_and_members_fixed(seed):
    g = GridDomain.unit(8)
    q = DenseQuantizer(g)
    rng = np.random.default_rng(seed)
    v = StateField(g, rng.uniform(-1.5, 1.5, 8))
    gaps = [distance1(q.quantize(n, v), v) for n in (1, 4, 16, 64, 256)]
    assert all(b <= a for a, b in zip(gaps, gaps[1:]))
    k = int(rng.integers(1, 200))
    assert q.quantize(200, q.member(k)) == q.member(k)


def test_gap_shrinks_on_fine_prefix():
    g = GridDomain.unit(4)
    q = DenseQuantizer(g)
    v = StateField(g, [0.3, -0.2, 0.9, 0.1])
    assert distance1(q.quantize(5000, v), v) < 0.5 * distance1(q.quantize(5, v), v)

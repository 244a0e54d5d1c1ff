import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jumpflow import (
    ConfigError,
    DomainError,
    InterArrival,
    MarkSpace,
    MarkedPointRealization,
    NumericError,
    RenewalSpec,
    atoms_in_window,
    counting_integral,
    sample_renewal,
)


def test_fixed_inter_arrivals_give_integer_times():
    r = sample_renewal(RenewalSpec(InterArrival.fixed(1.0)), 3.5)
    assert r.times == (1.0, 2.0, 3.0)
    assert r.count(0.0) == 0
    assert r.count(2.0) == 2  # right-closed window (0, t]
    assert r.count(3.5) == 3


def test_counting_integral_hand_computed():
    r = MarkedPointRealization([0.5, 1.2, 2.0], ["a", "b", "a"], 3.0)
    weight = {"a": 1.0, "b": 0.5}
    f = lambda tau, z: tau * weight[z]  # noqa: E731
    # 0.5 * 1 + 1.2 * 0.5 + 2.0 * 1 = 3.1; only the first two atoms lie in (0, 1.5]
    assert counting_integral(f, r, 3.0) == pytest.approx(3.1, abs=1e-15)
    assert counting_integral(f, r, 1.5) == pytest.approx(1.1, abs=1e-15)
    assert counting_integral(f, r, 0.4) == 0.0


def test_counting_integral_rejects_non_finite():
    r = MarkedPointRealization([0.5, 1.0], [0, 0], 2.0)
    with pytest.raises(NumericError, match="atom 2"):
        counting_integral(lambda tau, z: math.inf if tau == 1.0 else 1.0, r, 2.0)


@pytest.mark.parametrize(
    "times,marks",
    [([0.5, 0.5], [0, 0]), ([1.0, 0.5], [0, 0]), ([0.0], [0]), ([3.0], [0]), ([1.0], [])],
)
def test_realization_validation(times, marks):
    with pytest.raises(DomainError):
        MarkedPointRealization(times, marks, 2.0)


def test_count_outside_window():
    r = MarkedPointRealization([1.0], [0], 2.0)
    for t in (-0.1, 2.1):
        with pytest.raises(DomainError):
            r.count(t)


@pytest.mark.parametrize(
    "kwargs",
    [dict(kind="exponential", rate=0.0), dict(kind="uniform", a=0.5, b=0.5), dict(kind="fixed", d=-1.0),
     dict(kind="gamma", rate=1.0)],
)
def test_inter_arrival_validation(kwargs):
    with pytest.raises(ConfigError):
        InterArrival(**kwargs)


def test_mark_weights_validated():
    with pytest.raises(ConfigError):
        RenewalSpec(InterArrival.fixed(1.0), MarkSpace((0, 1)), (0.7, 0.7))
    with pytest.raises(ConfigError):
        MarkSpace((0, 0))


def test_same_seed_same_path_and_marks_do_not_move_times():
    law = InterArrival.exponential(3.0)
    a = sample_renewal(RenewalSpec(law, MarkSpace((0, 1)), (0.5, 0.5), seed=7), 4.0)
    b = sample_renewal(RenewalSpec(law, MarkSpace((0, 1)), (0.5, 0.5), seed=7), 4.0)
    c = sample_renewal(RenewalSpec(law, MarkSpace(("x", "y", "z")), (0.1, 0.1, 0.8), seed=7), 4.0)
    assert a == b
    assert a.times == c.times
    assert a != sample_renewal(RenewalSpec(law, seed=8), 4.0)


def test_uniform_law_respects_bounds():
    r = sample_renewal(RenewalSpec(InterArrival.uniform(0.2, 0.3), seed=3), 50.0)
    gaps = np.diff([0.0, *r.times])
    assert gaps.min() >= 0.2 and gaps.max() <= 0.3


def test_poisson_mean_count():
    # exponential(2) on (0, 10]: N ~ Poisson(20); mean of 2000 paths within 3 sigma
    counts = [len(sample_renewal(RenewalSpec(InterArrival.exponential(2.0), seed=s), 10.0)) for s in range(2000)]
    assert abs(np.mean(counts) - 20.0) <= 3 * math.sqrt(20.0 / 2000)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 64 - 1), rate=st.floats(0.1, 20.0), horizon=st.floats(0.1, 5.0))
def test_hitting_times_strictly_increasing(seed, rate, horizon):
    r = sample_renewal(RenewalSpec(InterArrival.exponential(rate), seed=seed), horizon)
    times = np.array(r.times)
    assert np.all(np.diff(times) > 0)
    assert np.all((times > 0) & (times <= horizon))
    assert atoms_in_window(r, horizon) == r.atoms


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 64 - 1), rate=st.floats(0.1, 20.0))
def test_json_round_trip_is_exact(seed, rate):
    spec = RenewalSpec(InterArrival.exponential(rate), MarkSpace((0, 1)), (0.25, 0.75), seed)
    r = sample_renewal(spec, 3.0)
    back = MarkedPointRealization.from_json(r.to_json())
    assert back == r
    assert back.spec == spec
    assert back.to_json() == r.to_json()


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), t=st.floats(0.0, 5.0))
def test_counting_integral_matches_brute_force(seed, t):
    r = sample_renewal(RenewalSpec(InterArrival.exponential(2.0), MarkSpace((0, 1)), (0.5, 0.5), seed), 5.0)
    f = lambda tau, z: math.cos(tau) + z  # noqa: E731
    brute = 0.0
    for tau, z in zip(r.times, r.marks):
        if tau <= t:
            brute += f(tau, z)
    assert counting_integral(f, r, t) == brute

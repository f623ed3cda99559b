import random

import pytest
from hypothesis import given, strategies as st

from cbtree.core import FAILURE, RUNNING, SUCCESS
from cbtree.models import (
    BatteryAction,
    FailingAction,
    PerpetualAction,
    ProfileAction,
    StochasticLinearAction,
)


@given(st.floats(0.001, 0.5), st.floats(0, 0.1), st.integers(0, 2**32))
def test_linear_steps_stay_within_noise_band(a, noise, seed):
    m = StochasticLinearAction(a, noise, random.Random(seed))
    prev = m.progress
    while m.progress < 1.0:
        status = m.tick()
        assert 0.0 <= m.progress <= 1.0
        if m.progress < 1.0:
            assert a - noise - 1e-12 <= m.progress - prev <= a + noise + 1e-12 or m.progress == 0.0
            assert status is RUNNING
        else:
            assert status is SUCCESS
        prev = m.progress
        assert m.steps < 10_000


def test_noise_free_linear_counts_steps():
    m = StochasticLinearAction(0.015)
    while m.tick() is RUNNING:
        pass
    assert m.steps == 67


def test_ten_tenths_complete_exactly():
    m = BatteryAction({"A"}, 0.1)
    for _ in range(9):
        assert m.tick() is RUNNING
    assert m.tick() is SUCCESS
    assert m.progress == 1.0 and m.resources() == frozenset()


def test_linear_consumes_one_draw_per_tick_even_without_noise():
    r1, r2 = random.Random(5), random.Random(5)
    quiet = StochasticLinearAction(0.1, 0.0, r1)
    noisy = StochasticLinearAction(0.1, 0.01, r2)
    for _ in range(3):
        quiet.tick()
        noisy.tick()
    assert r1.random() == r2.random()


@pytest.mark.parametrize("a, noise", [(0, 0), (-0.1, 0), (0.1, -0.01)])
def test_linear_rejects_bad_parameters(a, noise):
    with pytest.raises(ValueError):
        StochasticLinearAction(a, noise)


def test_profile_table_then_repeat():
    m = ProfileAction([0.0, 0.5, 0.25])
    m.tick()
    assert m.progress == 0.0
    m.tick()
    m.tick()
    m.tick()
    assert m.progress == 1.0


@pytest.mark.parametrize("target, expected", [(0.5, 5.0), (0.25, 2.0), (0.0, 0.0), (1.0, 10.0)])
def test_profile_expected_time(target, expected):
    assert ProfileAction(0.1).expected_time(target) == expected


def test_profile_expected_time_uses_dt():
    assert ProfileAction(0.1).expected_time(0.5, dt=0.1) == pytest.approx(0.5)


@pytest.mark.parametrize("schedule", [[], [-0.1, 0.2], [0.1, 0.0]])
def test_profile_rejects_bad_tables(schedule):
    with pytest.raises(ValueError):
        ProfileAction(schedule)


def test_perpetual_is_zero_or_one():
    m = PerpetualAction({"head"})
    assert m.progress == 0.0 and not m.finite
    for _ in range(3):
        assert m.tick() is RUNNING
        assert m.progress == 1.0
    m.halt()
    assert m.progress == 0.0
    assert m.resources() == {"head"}


def test_failing_action():
    m = FailingAction()
    assert m.tick() is FAILURE and not m.finite


def test_halt_keeps_synthetic_progress():
    m = StochasticLinearAction(0.3)
    m.tick()
    m.halt()
    assert m.progress == pytest.approx(0.3)

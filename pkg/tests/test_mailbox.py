import pytest
import time

from hypothesis import given, strategies as st

from cbtree.core import RUNNING, SUCCESS
from cbtree.mailbox import AsyncAction, TokenMailbox, pump_quantum, simulate_quantum_schedule
from cbtree.models import ProfileAction


def make(step=0.01):
    return AsyncAction(ProfileAction(step))


def test_mailbox_capacity_is_one():
    box = TokenMailbox()
    box.push()
    box.push()
    assert box.occupancy == 1
    assert box.take() and not box.take()


def test_twenty_hertz_ticks_with_hundred_ms_quantum_never_starve():
    action = make()
    log = simulate_quantum_schedule(action, tick_period=50, quantum=100, horizon=3000)
    assert log.halts == [] and log.idle_polls == []
    assert log.steps == list(range(100, 3001, 100))
    assert log.max_occupancy == 1


def test_worker_halts_within_one_quantum_after_ticks_stop():
    action = make()
    log = simulate_quantum_schedule(action, 50, 100, horizon=2000, ticks_until=1000)
    assert log.halts == [1100]
    assert all(t <= 1000 for t in log.steps)
    assert action.inner.progress == pytest.approx(len(log.steps) * 0.01)
    assert action.steps == len(log.steps)


def test_two_ticks_between_polls_keep_one_token():
    action = make()
    action.tick()
    action.tick()
    assert action.mailbox.occupancy == 1
    assert pump_quantum(action)
    assert not pump_quantum(action)
    assert action.steps == 1


def test_completed_inner_reports_success():
    action = AsyncAction(ProfileAction(0.5))
    assert action.tick() is RUNNING
    pump_quantum(action)
    action.tick()
    pump_quantum(action)
    assert action.tick() is SUCCESS


def test_halt_drains_pending_token():
    action = make()
    action.tick()
    action.halt()
    assert not pump_quantum(action)
    assert action.steps == 0


@given(st.integers(1, 60), st.integers(1, 60), st.integers(0, 600))
def test_occupancy_bounded_and_idle_polls_do_nothing(period, quantum, stop):
    action = make(0.001)
    log = simulate_quantum_schedule(action, period, quantum, horizon=600, ticks_until=stop)
    assert log.max_occupancy <= 1
    assert action.steps == len(log.steps)
    assert set(log.steps).isdisjoint(log.idle_polls)
    if period * 2 <= quantum:
        # at least two ticks land in every poll window while ticking lasts
        assert not [t for t in log.idle_polls if t < stop]


def test_threaded_worker_steps_and_stops():
    from cbtree.mailbox import QuantumWorker

    action = make()
    worker = QuantumWorker(action, 0.005)
    worker.start()
    deadline = time.monotonic() + 2.0
    while action.steps < 3 and time.monotonic() < deadline:
        action.tick()
        time.sleep(0.001)
    worker.stop()
    worker.join(1.0)
    assert action.steps >= 3
    assert not worker.is_alive()

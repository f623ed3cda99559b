"""Asynchronous actions driven by a one-slot token mailbox.

The ticker (the tree) deposits a token on every tick; an external worker
polls once per quantum, consumes the token and runs one control step, or
stops the controller when the mailbox is empty.  A single slot means the
worker can never bank steps for a tree that has stopped ticking.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

from .core import RUNNING, SUCCESS, NodeStatus


class TokenMailbox:
    """Single-producer, single-consumer box holding at most one token."""

    capacity = 1

    def __init__(self):
        self._lock = threading.Lock()
        self._tokens = 0

    def push(self) -> None:
        with self._lock:
            self._tokens = 1  # replaces, never accumulates

    def take(self) -> bool:
        with self._lock:
            had = self._tokens
            self._tokens = 0
        return bool(had)

    def drain(self) -> None:
        with self._lock:
            self._tokens = 0

    @property
    def occupancy(self) -> int:
        return self._tokens


class AsyncAction:
    """Ticker-side face of an action whose steps run in a worker.

    ``inner`` is any synchronous action model; the worker advances it one
    step per consumed token.
    """

    finite = True

    def __init__(self, inner, mailbox: TokenMailbox | None = None, name: str | None = None):
        self.inner = inner
        self.mailbox = mailbox if mailbox is not None else TokenMailbox()
        self.name = name or getattr(inner, "name", "async")
        self.running = False
        self.steps = 0
        self.halts = 0

    @property
    def progress(self) -> float:
        return self.inner.progress

    @property
    def nominal_step(self) -> float:
        return self.inner.nominal_step

    def resources(self) -> frozenset[str]:
        return self.inner.resources()

    def tick(self, world=None) -> NodeStatus:
        if self.inner.progress >= 1.0:
            return SUCCESS
        self.mailbox.push()
        return RUNNING

    def halt(self) -> None:
        self.mailbox.drain()


def pump_quantum(action: AsyncAction) -> bool:
    """One worker poll: consume a token and step, or stop the controller.

    Returns True when a step was executed.
    """
    if action.mailbox.take():
        if action.inner.progress < 1.0:
            action.inner.tick()
            action.steps += 1
        action.running = True
        return True
    if action.running:
        action.inner.halt()
        action.halts += 1
    action.running = False
    return False


@dataclass
class QuantumLog:
    steps: list[int] = field(default_factory=list)  # times of executed steps
    halts: list[int] = field(default_factory=list)  # times the worker stopped
    idle_polls: list[int] = field(default_factory=list)
    max_occupancy: int = 0


def simulate_quantum_schedule(
    action: AsyncAction,
    tick_period: int,
    quantum: int,
    horizon: int,
    ticks_until: int | None = None,
) -> QuantumLog:
    """Replay ticker and worker on an integer clock (e.g. milliseconds).

    Ticks fire every ``tick_period`` up to ``ticks_until`` (exclusive);
    the worker polls every ``quantum`` starting at ``quantum``.  At equal
    timestamps the tick is delivered before the poll.
    """
    log = QuantumLog()
    stop = horizon if ticks_until is None else ticks_until
    for t in range(0, horizon + 1):
        if t % tick_period == 0 and t < stop:
            action.tick()
            log.max_occupancy = max(log.max_occupancy, action.mailbox.occupancy)
        if t > 0 and t % quantum == 0:
            halts_before = action.halts
            if pump_quantum(action):
                log.steps.append(t)
            else:
                log.idle_polls.append(t)
                if action.halts > halts_before:
                    log.halts.append(t)
    return log


class QuantumWorker(threading.Thread):
    """Real-time worker thread polling an :class:`AsyncAction` every quantum."""

    def __init__(self, action: AsyncAction, quantum: float):
        super().__init__(daemon=True)
        self.action = action
        self.quantum = quantum
        self._stop_event = threading.Event()

    def run(self) -> None:
        while not self._stop_event.wait(self.quantum):
            pump_quantum(self.action)

    def stop(self) -> None:
        self._stop_event.set()

"""Synthetic action models used by the simulations.

Every model advances only when ticked, reports a ``progress`` in [0, 1] and
says which resources it needs in its current state.  Finite models release
their resources once they reach 1.0.
"""

from __future__ import annotations

import random
from typing import Iterable, Sequence

from .core import FAILURE, RUNNING, SUCCESS, NodeStatus
from .sync import PROGRESS_EPS, clamp01


class ActionModel:
    finite = True
    name = "action"

    def __init__(self, uses: Iterable[str] = (), progress: float = 0.0, name: str | None = None):
        self.uses = frozenset(uses)
        self.progress = clamp01(progress)
        self.steps = 0
        if name is not None:
            self.name = name

    @property
    def nominal_step(self) -> float:
        raise NotImplementedError

    def resources(self) -> frozenset[str]:
        return self.uses if self.progress < 1.0 else frozenset()

    def advance(self) -> None:
        raise NotImplementedError

    def tick(self, world=None) -> NodeStatus:
        if self.progress >= 1.0:
            return SUCCESS
        self.advance()
        self.steps += 1
        return SUCCESS if self.progress >= 1.0 else RUNNING

    def halt(self) -> None:
        """Synthetic actions keep their progress when they lose ticks."""


class StochasticLinearAction(ActionModel):
    """Gains ``a`` plus uniform noise in ``[-noise, noise]`` per tick.

    One uniform variate is consumed per tick, even with zero noise, so two
    configurations that differ only in ``noise`` see the same random stream.
    """

    def __init__(
        self,
        a: float,
        noise: float = 0.0,
        rng: random.Random | None = None,
        uses: Iterable[str] = (),
        progress: float = 0.0,
        name: str | None = None,
    ):
        if a <= 0:
            raise ValueError("nominal increment must be positive")
        if noise < 0:
            raise ValueError("noise half-width must be non-negative")
        super().__init__(uses, progress, name)
        self.a = a
        self.noise = noise
        self.rng = rng if rng is not None else random.Random(0)

    @property
    def nominal_step(self) -> float:
        return self.a

    def advance(self) -> None:
        w = self.noise * (2.0 * self.rng.random() - 1.0)
        self.progress = clamp01(self.progress + self.a + w)


class ProfileAction(ActionModel):
    """Deterministic progress following a per-tick increment schedule.

    With a single increment the schedule repeats it forever; a longer table
    is walked once and its last entry repeats afterwards.
    """

    def __init__(
        self,
        schedule: Sequence[float] | float,
        uses: Iterable[str] = (),
        progress: float = 0.0,
        name: str | None = None,
    ):
        super().__init__(uses, progress, name)
        if isinstance(schedule, (int, float)):
            schedule = (float(schedule),)
        self.schedule = tuple(float(s) for s in schedule)
        if not self.schedule or any(s < 0 for s in self.schedule) or self.schedule[-1] <= 0:
            raise ValueError("profile needs non-negative increments ending in a positive one")

    @property
    def nominal_step(self) -> float:
        return min(s for s in self.schedule if s > 0)

    def advance(self) -> None:
        i = min(self.steps, len(self.schedule) - 1)
        self.progress = clamp01(self.progress + self.schedule[i])

    def expected_time(self, target: float, dt: float = 1.0) -> float:
        """Cycle (times ``dt``) at which the profile is closest to ``target``."""
        probe = ProfileAction(self.schedule)
        best_k, best_d = 0, abs(probe.progress - target)
        k = 0
        while probe.progress < 1.0:
            probe.tick()
            k += 1
            d = abs(probe.progress - target)
            if d < best_d - PROGRESS_EPS:
                best_k, best_d = k, d
        return best_k * dt


class BatteryAction(ActionModel):
    """Charges ``step`` per tick while holding both of its cables."""

    def __init__(
        self,
        uses: Iterable[str],
        step: float = 0.1,
        progress: float = 0.0,
        name: str | None = None,
    ):
        super().__init__(uses, progress, name)
        if step <= 0:
            raise ValueError("charge step must be positive")
        self.step = step

    @property
    def nominal_step(self) -> float:
        return self.step

    def advance(self) -> None:
        self.progress = clamp01(self.progress + self.step)


class PerpetualAction(ActionModel):
    """Runs as long as it is ticked; progress is 1 while active, 0 otherwise."""

    finite = False

    def __init__(self, uses: Iterable[str] = (), name: str | None = None):
        super().__init__(uses, 0.0, name)
        self.active = False

    @property
    def nominal_step(self) -> float:
        return 1.0

    def resources(self) -> frozenset[str]:
        return self.uses

    def tick(self, world=None) -> NodeStatus:
        self.active = True
        self.progress = 1.0
        self.steps += 1
        return RUNNING

    def halt(self) -> None:
        self.active = False
        self.progress = 0.0


class FailingAction(ActionModel):
    """Fails on every tick; handy for exercising fallbacks."""

    finite = False

    @property
    def nominal_step(self) -> float:
        return 1.0

    def tick(self, world=None) -> NodeStatus:
        self.steps += 1
        return FAILURE

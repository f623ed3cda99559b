"""Progress barriers, sync groups and the shared resource table.

This module is pure bookkeeping: it knows nothing about node classes, so the
decorators that use it live in :mod:`cbtree.decorators`.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Sequence

# Accumulated float increments (ten steps of 0.1 and the like) land a few ulps
# off round values; progress within this distance counts as reached.
PROGRESS_EPS = 1e-9


def clamp01(x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0 - PROGRESS_EPS:
        return 1.0
    return x


def barrier_levels(barriers: Iterable[float]) -> tuple[float, ...]:
    """Validate an absolute barrier list and append the 1.0 sentinel."""
    levels = tuple(float(b) for b in barriers)
    for lo, hi in zip(levels, levels[1:]):
        if not hi > lo:
            raise ValueError(f"barriers must be strictly increasing, got {levels}")
    if levels and not (0.0 < levels[0] and levels[-1] <= 1.0):
        raise ValueError(f"barriers must lie in (0, 1], got {levels}")
    if not levels or levels[-1] < 1.0:
        levels += (1.0,)
    return levels


def equidistant_barriers(count: int) -> tuple[float, ...]:
    """``count`` evenly spaced interior barriers; 9 gives 0.1, 0.2, ..., 0.9."""
    if count < 0:
        raise ValueError("barrier count must be non-negative")
    return tuple((i + 1) / (count + 1) for i in range(count))


def absolute_barrier(barriers: Sequence[float], progresses: Sequence[float]) -> float:
    """The lowest barrier level that not every member has reached yet.

    ``barriers`` is sorted and may omit the 1.0 sentinel; an implicit level 0
    precedes it.  Once every member is at 1.0 the sentinel is returned.
    """
    if not progresses:
        raise ValueError("barrier over an empty member set")
    levels = barriers if barriers and barriers[-1] >= 1.0 else barrier_levels(barriers)
    i = bisect_right(levels, min(progresses) + PROGRESS_EPS)
    return levels[i] if i < len(levels) else levels[-1]


def relative_barrier(delta: float, progresses: Sequence[float]) -> float:
    """Lagging member plus ``delta``; deliberately not clamped to 1."""
    if not progresses:
        raise ValueError("barrier over an empty member set")
    return min(progresses) + delta


@dataclass(frozen=True)
class Absolute:
    barriers: tuple[float, ...]
    levels: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "barriers", tuple(float(b) for b in self.barriers))
        object.__setattr__(self, "levels", barrier_levels(self.barriers))

    def __call__(self, progresses: Sequence[float]) -> float:
        i = bisect_right(self.levels, min(progresses) + PROGRESS_EPS)
        return self.levels[i] if i < len(self.levels) else 1.0


@dataclass(frozen=True)
class Relative:
    delta: float

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0 or math.isnan(self.delta):
            raise ValueError(f"relative threshold must be in [0, 1], got {self.delta}")

    def __call__(self, progresses: Sequence[float]) -> float:
        return min(progresses) + self.delta


class SyncGroup:
    """Progress barrier shared by every decorator that names this group.

    ``snapshot`` holds one progress value per member.  A member writes its
    child's progress right after ticking it, and the engine refreshes all
    members at the end of every cycle, so the barrier a member sees already
    accounts for members ticked earlier in the same pass.
    """

    def __init__(self, name: str, policy: Absolute | Relative):
        self.name = name
        self.policy = policy
        self.members: list = []
        self.snapshot: list[float] = []

    def join(self, member) -> int:
        self.members.append(member)
        self.snapshot.append(0.0)
        return len(self.members) - 1

    def barrier(self) -> float:
        return self.policy(self.snapshot)

    def refresh(self, world) -> None:
        for i, member in enumerate(self.members):
            self.snapshot[i] = member.progress(world)

    def __repr__(self) -> str:
        return f"SyncGroup({self.name!r}, {self.policy!r}, members={len(self.members)})"


class ResourceTable:
    """Allocation map, priorities and the set of denied contenders.

    ``alpha`` maps each held resource to its holder's node id; free resources
    are simply absent.  ``waiting`` remembers what each denied contender asked
    for on its most recent attempt.
    """

    def __init__(self, universe: Iterable[str] | None = None):
        self.universe = frozenset(universe) if universe is not None else None
        self.alpha: dict[str, int] = {}
        self.rho: dict[int, float] = {}
        self.waiting: dict[int, frozenset[str]] = {}
        # (node id, requested set) for every child ticked under a resource
        # decorator during the current cycle
        self.granted: list[tuple[int, frozenset[str]]] = []

    def begin_cycle(self) -> None:
        self.granted = []

    def holder(self, resource: str) -> int | None:
        return self.alpha.get(resource)

    def held_by(self, node_id: int) -> set[str]:
        return {q for q, h in self.alpha.items() if h == node_id}

    def priority(self, node_id: int) -> float:
        return self.rho.get(node_id, 0.0)

    def strongest_rival(self, node_id: int, wanted: frozenset[str]) -> float:
        """Highest priority among other waiters that want any of ``wanted``."""
        best = -math.inf
        for other, request in self.waiting.items():
            if other != node_id and not request.isdisjoint(wanted):
                best = max(best, self.rho.get(other, 0.0))
        return best

    def acquire(self, node_id: int, resources: Iterable[str]) -> None:
        for q in resources:
            if self.universe is not None and q not in self.universe:
                raise KeyError(f"resource {q!r} is not declared")
            holder = self.alpha.get(q)
            if holder is not None and holder != node_id:
                raise RuntimeError(f"resource {q!r} already held by node {holder}")
            self.alpha[q] = node_id

    def release(self, node_id: int, resources: Iterable[str] | None = None) -> None:
        qs = self.held_by(node_id) if resources is None else resources
        for q in qs:
            if self.alpha.get(q) == node_id:
                del self.alpha[q]

    def allocation(self) -> dict[str, int]:
        return dict(self.alpha)


def progress_of(node, world) -> float:
    return clamp01(node.progress(world))


def resources_of(node, world) -> frozenset[str]:
    return frozenset(node.resources(world))

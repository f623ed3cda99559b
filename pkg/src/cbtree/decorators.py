"""Progress- and resource-synchronization decorators."""

from __future__ import annotations

from typing import Callable

from .core import RUNNING, ConfigurationError, Decorator, Node, NodeStatus, World
from .sync import PROGRESS_EPS, SyncGroup

PriorityIncrement = Callable[[World], float]


class ProgressSync(Decorator):
    """Ticks its child only while the child is not ahead of the group barrier."""

    kind = "psync"
    __slots__ = ("group_name", "group", "slot")

    def __init__(self, child: Node, group: str | SyncGroup, label: str | None = None):
        super().__init__((child,), label)
        if isinstance(group, SyncGroup):
            self.group_name = group.name
            self.group: SyncGroup | None = group
        else:
            self.group_name = group
            self.group = None
        self.slot = -1

    def bind(self, world: World) -> None:
        group = world.groups.get(self.group_name)
        if group is None:
            if self.group is None:
                raise ConfigurationError(f"unknown sync group {self.group_name!r}")
            world.groups[self.group_name] = group = self.group
        self.group = group
        self.slot = group.join(self)

    def _tick(self, world: World) -> NodeStatus:
        child = self.children[0]
        group = self.group
        if child.progress(world) <= group.barrier() + PROGRESS_EPS:
            status = child.tick(world)
            group.snapshot[self.slot] = child.progress(world)
            return status
        return RUNNING


def constant_increment(value: float) -> PriorityIncrement:
    def g(world: World) -> float:
        return value

    g.value = value  # type: ignore[attr-defined]
    return g


class ResourceSync(Decorator):
    """Grants its child exclusive use of the resources it currently needs.

    A child runs only when each needed resource is free or already its own,
    and no waiting rival with strictly higher priority wants one of them.
    Otherwise it gives back whatever it holds, its priority grows by ``g``,
    and the decorator answers Running.  Priority drops to zero whenever the
    child newly acquires something.
    """

    kind = "rsync"
    __slots__ = ("increment",)

    def __init__(
        self,
        child: Node,
        g: float | PriorityIncrement = 0.0,
        label: str | None = None,
    ):
        super().__init__((child,), label)
        self.increment = g if callable(g) else constant_increment(float(g))

    def _tick(self, world: World) -> NodeStatus:
        table = world.resources
        me = self.id
        child = self.children[0]
        need = frozenset(child.resources(world))
        held = table.held_by(me)
        stale = held - need
        if stale:
            table.release(me, stale)
            held -= stale

        alpha = table.alpha
        granted = all(alpha.get(q, me) == me for q in need)
        if granted and need and table.strongest_rival(me, need) > table.rho.get(me, 0.0):
            granted = False
        if not granted:
            table.release(me)
            table.rho[me] = table.rho.get(me, 0.0) + self.increment(world)
            table.waiting[me] = need
            return RUNNING

        if not need <= held:
            table.rho[me] = 0.0
        table.waiting.pop(me, None)
        table.acquire(me, need)
        table.granted.append((me, need))
        return child.tick(world)

    def on_halt(self, world: World) -> None:
        world.resources.release(self.id)
        world.resources.waiting.pop(self.id, None)

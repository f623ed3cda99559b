"""Tree nodes, tick dispatch and halt propagation.

One root cycle is a single synchronous depth-first pass.  Every node records
the cycle in which it was last ticked; after the pass, nodes that were ticked
in the previous cycle but not in this one are halted.
"""

from __future__ import annotations

import enum
from typing import Callable, Iterable, Iterator, Sequence as Seq

from .sync import PROGRESS_EPS, ResourceTable, SyncGroup


class NodeStatus(enum.Enum):
    SUCCESS = "Success"
    RUNNING = "Running"
    FAILURE = "Failure"

    @property
    def terminal(self) -> bool:
        return self is not NodeStatus.RUNNING

    def __str__(self) -> str:
        return self.value


SUCCESS = NodeStatus.SUCCESS
RUNNING = NodeStatus.RUNNING
FAILURE = NodeStatus.FAILURE


class ConfigurationError(ValueError):
    """A tree that violates an arity or reference rule."""


class World:
    """Everything a tick may read or mutate besides the nodes themselves."""

    def __init__(
        self,
        resources: ResourceTable | None = None,
        groups: dict[str, SyncGroup] | None = None,
        blackboard: dict | None = None,
        dt: float = 1.0,
    ):
        self.cycle = 0
        self.dt = dt
        self.resources = resources if resources is not None else ResourceTable()
        self.groups = groups if groups is not None else {}
        self.blackboard = blackboard if blackboard is not None else {}
        self.ticked: list[Node] = []

    @property
    def time(self) -> float:
        return self.cycle * self.dt


class Node:
    kind = "node"
    min_children = 0
    max_children: int | None = 0

    __slots__ = ("id", "children", "status", "last_tick", "label")

    def __init__(self, children: Iterable[Node] = (), label: str | None = None):
        self.children: list[Node] = list(children)
        n = len(self.children)
        if n < self.min_children or (self.max_children is not None and n > self.max_children):
            raise ConfigurationError(f"{self.kind} cannot take {n} children")
        self.id = -1
        self.status: NodeStatus | None = None
        self.last_tick = -1
        self.label = label or self.kind

    def tick(self, world: World) -> NodeStatus:
        self.last_tick = world.cycle
        world.ticked.append(self)
        status = self._tick(world)
        self.status = status
        return status

    def _tick(self, world: World) -> NodeStatus:
        raise NotImplementedError

    def on_halt(self, world: World) -> None:
        """Kind-specific stop hook; the default has nothing to stop."""

    def progress(self, world: World) -> float:
        raise NotImplementedError

    def resources(self, world: World) -> frozenset[str]:
        return frozenset()

    def walk(self) -> Iterator[Node]:
        yield self
        for child in self.children:
            yield from child.walk()

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.label!r} id={self.id}>"


def tick(node: Node, world: World) -> NodeStatus:
    return node.tick(world)


def halt(node: Node, world: World) -> None:
    """Stop ``node`` and every running descendant."""
    for n in node.walk():
        n.on_halt(world)
        if n.status is RUNNING:
            n.status = None


class _Composite(Node):
    min_children = 1
    max_children = None
    __slots__ = ()

    def _active_index(self) -> int:
        """Index of the child currently executing, judged from last statuses."""
        raise NotImplementedError

    def progress(self, world: World) -> float:
        raise NotImplementedError

    def resources(self, world: World) -> frozenset[str]:
        return self.children[self._active_index()].resources(world)


class Sequence(_Composite):
    kind = "seq"
    __slots__ = ()

    def _tick(self, world: World) -> NodeStatus:
        for child in self.children:
            status = child.tick(world)
            if status is not SUCCESS:
                return status
        return SUCCESS

    def _done(self, i: int) -> bool:
        return self.children[i].status is SUCCESS

    def _active_index(self) -> int:
        n = len(self.children)
        for i in range(n):
            if not self._done(i):
                return i
        return n - 1

    def progress(self, world: World) -> float:
        n = len(self.children)
        done = 0
        while done < n and self._done(done):
            done += 1
        if done == n:
            return 1.0
        return (done + self.children[done].progress(world)) / n


class Fallback(_Composite):
    kind = "fb"
    __slots__ = ()

    def _tick(self, world: World) -> NodeStatus:
        for child in self.children:
            status = child.tick(world)
            if status is not FAILURE:
                return status
        return FAILURE

    def _failed(self, i: int) -> bool:
        return self.children[i].status is FAILURE

    def _active_index(self) -> int:
        for i in range(len(self.children)):
            if not self._failed(i):
                return i
        return len(self.children) - 1

    def progress(self, world: World) -> float:
        return self.children[self._active_index()].progress(world)


class Parallel(Node):
    kind = "par"
    min_children = 1
    max_children = None
    __slots__ = ("threshold",)

    def __init__(self, children: Iterable[Node], threshold: int, label: str | None = None):
        super().__init__(children, label)
        if not 1 <= threshold <= len(self.children):
            raise ConfigurationError(
                f"parallel threshold {threshold} outside 1..{len(self.children)}"
            )
        self.threshold = threshold

    def _tick(self, world: World) -> NodeStatus:
        successes = failures = 0
        for child in self.children:
            status = child.tick(world)
            if status is SUCCESS:
                successes += 1
            elif status is FAILURE:
                failures += 1
        if successes >= self.threshold:
            result = SUCCESS
        elif failures > len(self.children) - self.threshold:
            result = FAILURE
        else:
            return RUNNING
        # eager halt keeps traces deterministic
        for child in self.children:
            if child.status is RUNNING:
                halt(child, world)
        return result

    def progress(self, world: World) -> float:
        return min(child.progress(world) for child in self.children)

    def resources(self, world: World) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for child in self.children:
            out |= child.resources(world)
        return out


class MemorySequence(Sequence):
    """Sequence that skips children it has already seen finish."""

    kind = "seq*"
    __slots__ = ("memory",)

    def __init__(self, children: Iterable[Node], label: str | None = None):
        super().__init__(children, label)
        self.memory: dict[int, NodeStatus] = {}

    def _tick(self, world: World) -> NodeStatus:
        result = SUCCESS
        for i, child in enumerate(self.children):
            status = self.memory.get(i)
            if status is None:
                status = child.tick(world)
                if status is not RUNNING:
                    self.memory[i] = status
            if status is not SUCCESS:
                result = status
                break
        if result is not RUNNING:
            self.memory.clear()
        return result

    def _done(self, i: int) -> bool:
        return self.memory.get(i) is SUCCESS or self.children[i].status is SUCCESS


class MemoryFallback(Fallback):
    kind = "fb*"
    __slots__ = ("memory",)

    def __init__(self, children: Iterable[Node], label: str | None = None):
        super().__init__(children, label)
        self.memory: dict[int, NodeStatus] = {}

    def _tick(self, world: World) -> NodeStatus:
        result = FAILURE
        for i, child in enumerate(self.children):
            status = self.memory.get(i)
            if status is None:
                status = child.tick(world)
                if status is not RUNNING:
                    self.memory[i] = status
            if status is not FAILURE:
                result = status
                break
        if result is not RUNNING:
            self.memory.clear()
        return result

    def _failed(self, i: int) -> bool:
        return self.memory.get(i) is FAILURE or self.children[i].status is FAILURE


class Decorator(Node):
    min_children = 1
    max_children = 1
    __slots__ = ()

    @property
    def child(self) -> Node:
        return self.children[0]

    def progress(self, world: World) -> float:
        return self.children[0].progress(world)

    def resources(self, world: World) -> frozenset[str]:
        return self.children[0].resources(world)


class Action(Node):
    """Leaf driven by a behaviour model.

    The model must provide ``tick(world) -> NodeStatus``, a ``progress``
    attribute, ``resources() -> frozenset`` and ``halt()``.
    """

    kind = "act"
    __slots__ = ("model",)

    def __init__(self, model, label: str | None = None):
        super().__init__((), label or getattr(model, "name", None))
        self.model = model

    def _tick(self, world: World) -> NodeStatus:
        return self.model.tick(world)

    def on_halt(self, world: World) -> None:
        self.model.halt()

    def progress(self, world: World) -> float:
        return self.model.progress

    def resources(self, world: World) -> frozenset[str]:
        return self.model.resources()


class Condition(Node):
    kind = "cond"
    __slots__ = ("predicate",)

    def __init__(self, predicate: Callable[[World], bool], label: str | None = None):
        super().__init__((), label)
        self.predicate = predicate

    def _tick(self, world: World) -> NodeStatus:
        return SUCCESS if self.predicate(world) else FAILURE

    def progress(self, world: World) -> float:
        return 0.0


class BehaviorTree:
    """A validated tree plus the world it runs in.

    Construction assigns dense depth-first ids and wires every
    progress-synchronization decorator into its named group.
    """

    def __init__(
        self,
        root: Node,
        groups: Seq[SyncGroup] | dict[str, SyncGroup] = (),
        resources: Iterable[str] | None = None,
        blackboard: dict | None = None,
        dt: float = 1.0,
    ):
        if isinstance(groups, dict):
            groups = list(groups.values())
        self.root = root
        self.nodes: list[Node] = list(root.walk())
        seen = set()
        for i, node in enumerate(self.nodes):
            if id(node) in seen:
                raise ConfigurationError(f"node {node!r} appears twice in the tree")
            seen.add(id(node))
            node.id = i
        table = ResourceTable(resources)
        self.world = World(table, {g.name: g for g in groups}, blackboard, dt)
        for node in self.nodes:
            bind = getattr(node, "bind", None)
            if bind is not None:
                bind(self.world)
        for g in self.world.groups.values():
            g.refresh(self.world)
        self.status: NodeStatus | None = None

    @property
    def cycle(self) -> int:
        return self.world.cycle

    def tick_root(self) -> NodeStatus:
        """Run one root cycle and halt whatever lost its ticks."""
        world = self.world
        previous = world.ticked
        world.cycle += 1
        world.ticked = []
        world.resources.begin_cycle()
        status = self.root.tick(world)
        cycle = world.cycle
        for node in previous:
            if node.last_tick != cycle:
                node.on_halt(world)
                if node.status is RUNNING:
                    node.status = None
        for g in world.groups.values():
            g.refresh(world)
        self.status = status
        return status

    def actions(self) -> list[Action]:
        return [n for n in self.nodes if isinstance(n, Action)]

    def progress(self) -> float:
        return self.root.progress(self.world)


def monitored(nodes: Iterable[Node]) -> list[Action]:
    """Actions with a finite duration, i.e. the ones a run waits for."""
    return [n for n in nodes if isinstance(n, Action) and getattr(n.model, "finite", True)]


def complete(actions: Iterable[Action]) -> bool:
    return all(a.model.progress >= 1.0 - PROGRESS_EPS for a in actions)

"""Drive a tree cycle by cycle and record what happened."""

from __future__ import annotations

import math

from .core import BehaviorTree, complete, monitored
from .metrics import TickTrace


class AbortedRun(RuntimeError):
    """The cycle cap was hit before every monitored action finished."""

    def __init__(self, message: str, trace: TickTrace):
        super().__init__(message)
        self.trace = trace


def default_cycle_cap(tree: BehaviorTree) -> int:
    steps = [getattr(a.model, "nominal_step", None) for a in monitored(tree.nodes)]
    steps = [s for s in steps if s]
    if not steps:
        return 1000
    return 10 * math.ceil(1.0 / min(steps) - 1e-9)


def _labels(nodes) -> list[str]:
    seen: dict[str, int] = {}
    out = []
    for n in nodes:
        label = n.label
        if label in seen:
            label = f"{label}#{n.id}"
        seen[label] = 1
        out.append(label)
    return out


def run_once(
    tree: BehaviorTree,
    max_cycles: int | None = None,
    detail: bool = True,
    until_root: bool = False,
) -> TickTrace:
    """Tick ``tree`` until every monitored action reaches progress 1.

    Trees without finite actions, and every tree when ``until_root`` is
    set, run until the root returns a terminal status.  ``detail=False`` keeps only progress series, which is what the
    Monte-Carlo sweeps need.
    """
    cap = default_cycle_cap(tree) if max_cycles is None else max_cycles
    world = tree.world
    actions = monitored(tree.nodes)
    tracked = tree.actions()
    labels = _labels(tracked)
    trace = TickTrace(dt=world.dt)
    series = [trace.progress.setdefault(lab, []) for lab in labels]
    groups = list(world.groups.values())
    group_rows = [trace.groups.setdefault(g.name, []) for g in groups]
    if detail:
        trace.status_labels = tuple(_labels(tree.nodes))
    resources = world.resources

    def record():
        trace.cycles.append(world.cycle)
        for col, node in zip(series, tracked):
            col.append(node.model.progress)
        for rows, g in zip(group_rows, groups):
            rows.append(tuple(g.snapshot))
        if detail:
            trace.statuses.append(
                tuple(str(n.status) if n.last_tick == world.cycle else "-" for n in tree.nodes)
            )
            trace.root_status.append(str(tree.status) if tree.status is not None else "-")
            trace.holders.append(
                {q: tree.nodes[h].label for q, h in sorted(resources.alpha.items())}
            )
            trace.granted.append(
                [(tree.nodes[i].label, q) for i, q in resources.granted]
            )

    record()
    while True:
        if actions and complete(actions) and not until_root:
            return trace
        if (until_root or not actions) and tree.status is not None and tree.status.terminal:
            return trace
        if world.cycle >= cap:
            raise AbortedRun(f"no completion within {cap} cycles", trace)
        tree.tick_root()
        record()

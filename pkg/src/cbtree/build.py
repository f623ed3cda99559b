"""Turn a parsed document into a runnable tree."""

from __future__ import annotations

import random
from typing import Callable

import numpy as np

from .core import (
    Action,
    BehaviorTree,
    Condition,
    ConfigurationError,
    Fallback,
    MemoryFallback,
    MemorySequence,
    Node,
    Parallel,
    Sequence,
)
from .decorators import ProgressSync, ResourceSync
from .dsl import ActionDecl, DSLError, NodeExpr, TreeDocument, validate
from .models import (
    ActionModel,
    BatteryAction,
    FailingAction,
    PerpetualAction,
    ProfileAction,
    StochasticLinearAction,
)
from .sync import Absolute, Relative, SyncGroup

ModelFactory = Callable[[random.Random], ActionModel]


def derive_seed(*key: int) -> int:
    """64-bit seed that depends only on ``key``."""
    return int(np.random.SeedSequence([int(k) for k in key]).generate_state(1, np.uint64)[0])


def run_seed(master: int, run: int) -> int:
    return derive_seed(master, run)


def action_stream(seed: int, ordinal: int) -> random.Random:
    """Independent generator for the ``ordinal``-th action leaf of a run."""
    return random.Random(derive_seed(seed, ordinal))


def make_model(decl: ActionDecl, rng: random.Random) -> ActionModel:
    p = decl.params
    start = float(p.get("start", 0.0))  # type: ignore[arg-type]
    if decl.kind == "linear":
        return StochasticLinearAction(
            p["a"], p.get("noise", 0.0), rng, decl.uses, start, decl.name  # type: ignore[arg-type]
        )
    if decl.kind == "profile":
        schedule = p.get("table", p.get("step", 0.1))
        return ProfileAction(schedule, decl.uses, start, decl.name)  # type: ignore[arg-type]
    if decl.kind == "battery":
        return BatteryAction(decl.uses, p.get("step", 0.1), start, decl.name)  # type: ignore[arg-type]
    if decl.kind == "perpetual":
        return PerpetualAction(decl.uses, decl.name)
    if decl.kind == "fail":
        return FailingAction(decl.uses, name=decl.name)
    raise ConfigurationError(f"unknown action kind {decl.kind!r}")


def build_tree(
    doc: TreeDocument,
    seed: int = 0,
    models: dict[str, ModelFactory] | None = None,
    dt: float = 1.0,
) -> BehaviorTree:
    """Instantiate ``doc``; the k-th action leaf draws from ``action_stream(seed, k)``.

    ``models`` binds leaf names the document does not declare.
    """
    errors = [d for d in validate(doc) if d.is_error]
    if errors:
        raise DSLError(errors)
    if doc.root is None:
        raise ConfigurationError("document has no root node")
    models = models or {}
    ordinal = 0

    def make(expr: NodeExpr) -> Node:
        nonlocal ordinal
        kids = [make(c) for c in expr.children]
        k = expr.kind
        if k == "seq":
            return Sequence(kids)
        if k == "fb":
            return Fallback(kids)
        if k == "seq*":
            return MemorySequence(kids)
        if k == "fb*":
            return MemoryFallback(kids)
        if k == "par":
            return Parallel(kids, int(expr.arg))  # type: ignore[arg-type]
        if k == "psync":
            return ProgressSync(kids[0], str(expr.arg), f"psync:{kids[0].label}")
        if k == "rsync":
            return ResourceSync(kids[0], float(expr.arg or 0.0), f"rsync:{kids[0].label}")  # type: ignore[arg-type]
        if k == "act":
            name = str(expr.arg)
            rng = action_stream(seed, ordinal)
            ordinal += 1
            if name in doc.actions:
                model = make_model(doc.actions[name], rng)
            elif name in models:
                model = models[name](rng)
            else:
                raise ConfigurationError(f"no model bound to action {name!r}")
            return Action(model, name)
        if k == "cond":
            name = str(expr.arg)
            return Condition(lambda world, key=name: bool(world.blackboard.get(key, False)), name)
        raise ConfigurationError(f"unknown node kind {k!r}")

    root = make(doc.root)
    groups = [
        SyncGroup(g.name, Absolute(g.values) if g.policy == "absolute" else Relative(g.values[0]))
        for g in doc.groups.values()
    ]
    return BehaviorTree(root, groups, doc.resources, dict(doc.conditions), dt)

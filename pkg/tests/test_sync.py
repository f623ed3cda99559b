import random

import pytest
from hypothesis import given, strategies as st

from cbtree.core import RUNNING, SUCCESS, Action, BehaviorTree, Condition, Parallel, Sequence, Fallback
from cbtree.decorators import ProgressSync, ResourceSync, constant_increment
from cbtree.models import BatteryAction, ProfileAction, StochasticLinearAction
from cbtree.runner import run_once
from cbtree.sync import (
    PROGRESS_EPS,
    Absolute,
    Relative,
    ResourceTable,
    SyncGroup,
    absolute_barrier,
    barrier_levels,
    clamp01,
    equidistant_barriers,
    progress_of,
    relative_barrier,
    resources_of,
)

from conftest import Fixed

NINE = equidistant_barriers(9)


def test_equidistant_nine_is_tenths():
    assert NINE == pytest.approx([0.1 * i for i in range(1, 10)])
    assert equidistant_barriers(0) == ()
    assert equidistant_barriers(1) == (0.5,)


@pytest.mark.parametrize(
    "progresses, expected",
    [([0.0, 0.0], 0.1), ([0.05, 0.12], 0.1), ([0.95, 0.93], 1.0), ([1.0, 1.0], 1.0), ([0.1, 0.35], 0.2)],
)
def test_absolute_barrier_examples(progresses, expected):
    assert absolute_barrier(NINE, progresses) == pytest.approx(expected)


def test_absolute_barrier_without_interior_levels_is_transparent():
    assert absolute_barrier((), [0.0, 0.7]) == 1.0


@pytest.mark.parametrize(
    "delta, progresses, expected",
    [(0.1, [0.3, 0.45], 0.4), (1.0, [0.0, 0.7], 1.0), (0.0, [0.2, 0.2], 0.2)],
)
def test_relative_barrier_examples(delta, progresses, expected):
    assert relative_barrier(delta, progresses) == pytest.approx(expected)


def test_relative_barrier_is_not_clamped():
    assert relative_barrier(0.5, [0.8]) == pytest.approx(1.3)


@pytest.mark.parametrize("bad", [(0.5, 0.5), (0.6, 0.2), (0.0, 0.5), (0.5, 1.2)])
def test_barrier_lists_are_validated(bad):
    with pytest.raises(ValueError):
        barrier_levels(bad)


def test_sentinel_appended_once():
    assert barrier_levels((0.5,)) == (0.5, 1.0)
    assert barrier_levels((0.5, 1.0)) == (0.5, 1.0)


@pytest.mark.parametrize("delta", [-0.1, 1.1, float("nan")])
def test_relative_threshold_range(delta):
    with pytest.raises(ValueError):
        Relative(delta)


def test_empty_member_set_rejected():
    with pytest.raises(ValueError):
        absolute_barrier(NINE, [])
    with pytest.raises(ValueError):
        relative_barrier(0.1, [])


@given(st.floats(-5, 5, allow_nan=False))
def test_clamp_stays_in_unit_interval(x):
    assert 0.0 <= clamp01(x) <= 1.0


@given(st.lists(st.floats(0, 1), min_size=1, max_size=6))
def test_absolute_barrier_is_a_level_above_the_laggard(ps):
    b = absolute_barrier(NINE, ps)
    assert b in barrier_levels(NINE)
    assert b > min(ps) or b == 1.0


# progress / resource composition


def test_sequence_progress_folds_children():
    first = Action(ProfileAction(0.5, progress=1.0))
    second = Action(ProfileAction(0.5, progress=0.4))
    tree = BehaviorTree(Sequence([first, second]))
    tree.tick_root()
    second.model.progress = 0.4
    assert progress_of(tree.root, tree.world) == pytest.approx(0.7)


def test_parallel_progress_is_minimum():
    kids = [Action(ProfileAction(0.1, progress=p)) for p in (0.9, 0.2, 0.5)]
    tree = BehaviorTree(Parallel(kids, 3))
    assert progress_of(tree.root, tree.world) == pytest.approx(0.2)


def test_condition_progress_and_resources_are_empty(world):
    c = Condition(lambda w: True)
    assert progress_of(c, world) == 0.0
    assert resources_of(c, world) == frozenset()


def test_parallel_resources_are_union(world):
    root = Parallel([Action(BatteryAction({"arm"})), Action(BatteryAction({"base"}))], 2)
    assert resources_of(root, world) == {"arm", "base"}


def test_sequence_resources_follow_active_child(world):
    root = Sequence([Action(BatteryAction({"head"})), Action(BatteryAction({"arm"}))])
    assert resources_of(root, world) == {"head"}


def test_fallback_progress_follows_active_child(world):
    root = Fallback([Fixed(SUCCESS), Action(ProfileAction(0.1, progress=0.3))])
    root.children[0].status = None
    assert progress_of(root, world) == 1.0


def test_finished_battery_needs_nothing():
    b = BatteryAction({"A", "B"}, progress=1.0)
    assert b.resources() == frozenset()


# progress synchronization


def _synced(progresses, policy, statuses=None):
    group = SyncGroup("g", policy)
    models = [ProfileAction(0.05, progress=p) for p in progresses]
    decos = [ProgressSync(Action(m), group) for m in models]
    tree = BehaviorTree(Parallel(decos, len(decos)))
    return tree, models, decos


def test_child_behind_barrier_is_ticked():
    tree, models, decos = _synced([0.3, 0.3], Relative(0.1))
    tree.tick_root()
    assert [m.steps for m in models] == [1, 1]


def test_child_ahead_of_barrier_waits():
    tree, models, decos = _synced([0.45, 0.3], Relative(0.1))
    assert tree.tick_root() is RUNNING
    assert models[0].steps == 0 and decos[0].status is RUNNING
    assert decos[0].children[0].last_tick == -1
    assert models[1].steps == 1


def test_finished_child_at_sentinel_succeeds():
    tree, models, decos = _synced([1.0, 1.0], Absolute(NINE))
    assert tree.tick_root() is SUCCESS


def test_unknown_group_name_rejected():
    from cbtree.core import ConfigurationError

    with pytest.raises(ConfigurationError):
        BehaviorTree(ProgressSync(Action(ProfileAction(0.1)), "nope"))


def test_groups_span_branches():
    g = SyncGroup("g", Relative(0.0))
    fast = ProgressSync(Action(ProfileAction(0.2)), g)
    slow = ProgressSync(Action(ProfileAction(0.1)), g)
    root = Parallel([Sequence([fast]), Fallback([slow])], 2)
    tree = BehaviorTree(root)
    assert len(g.members) == 2
    trace = run_once(tree, until_root=True)
    assert trace.root_status[-1] == "Success"


def _linear_pair(a, noise, seed, policy):
    rngs = [random.Random(seed * 2 + i) for i in range(len(a))]
    models = [StochasticLinearAction(ai, noise, r) for ai, r in zip(a, rngs)]
    if policy is None:
        return BehaviorTree(Parallel([Action(m, f"x{i}") for i, m in enumerate(models)], len(a)))
    group = SyncGroup("g", policy)
    kids = [ProgressSync(Action(m, f"x{i}"), group) for i, m in enumerate(models)]
    return BehaviorTree(Parallel(kids, len(a)))


rates = st.lists(st.floats(0.01, 0.2), min_size=2, max_size=5)


@given(rates, st.floats(0, 0.01), st.floats(0, 1), st.integers(0, 10**6))
def test_relative_band(a, noise, delta, seed):
    s_max = max(a) + noise
    trace = run_once(_linear_pair(a, noise, seed, Relative(delta)), detail=False)
    for row in trace.members("g"):
        assert max(row) - min(row) <= delta + s_max + PROGRESS_EPS


@given(rates, st.floats(0, 0.01), st.integers(0, 9), st.integers(0, 10**6))
def test_absolute_gating(a, noise, count, seed):
    s_max = max(a) + noise
    levels = (0.0,) + barrier_levels(equidistant_barriers(count))
    trace = run_once(_linear_pair(a, noise, seed, Absolute(equidistant_barriers(count))), detail=False)
    for row in trace.members("g"):
        for prev, b in zip(levels, levels[1:]):
            if min(row) < prev - PROGRESS_EPS:
                assert max(row) <= b + s_max + PROGRESS_EPS


@given(rates, st.floats(0, 0.01), st.integers(0, 10**6))
def test_transparent_policies_match_undecorated_tree(a, noise, seed):
    bare = run_once(_linear_pair(a, noise, seed, None), detail=False)
    for policy in (Relative(1.0), Absolute(())):
        synced = run_once(_linear_pair(a, noise, seed, policy), detail=False)
        assert synced.progress == bare.progress
        assert synced.cycles == bare.cycles


@given(rates, st.floats(0, 0.01), st.floats(0, 1), st.integers(0, 10**6))
def test_synced_trajectory_is_bare_one_with_stalls(a, noise, delta, seed):
    bare = run_once(_linear_pair(a, noise, seed, None), detail=False)
    synced = run_once(_linear_pair(a, noise, seed, Relative(delta)), detail=False)
    for name, series in synced.progress.items():
        distinct = [series[0]] + [y for x, y in zip(series, series[1:]) if y != x]
        assert distinct == bare.progress[name][: len(distinct)]
        assert series[-1] == 1.0
    assert synced.last_cycle >= bare.last_cycle


# resource synchronization


def _dining(g):
    robots = [
        ResourceSync(Action(BatteryAction(q), f"robot{i + 1}"), g)
        for i, q in enumerate(({"A", "B"}, {"B", "C"}, {"C", "A"}))
    ]
    return BehaviorTree(Parallel(robots, 3), resources={"A", "B", "C"}), robots


def test_contender_waits_and_ages():
    tree, robots = _dining(1.0)
    tree.tick_root()
    table = tree.world.resources
    assert table.holder("A") == robots[0].id and table.holder("B") == robots[0].id
    assert robots[1].status is RUNNING and robots[1].child.last_tick == -1
    assert table.priority(robots[1].id) == 1.0
    assert table.priority(robots[0].id) == 0.0


def test_higher_priority_waiter_wins_freed_resource():
    low = ResourceSync(Action(BatteryAction({"q"}), "low"), 1.0)
    high = ResourceSync(Action(BatteryAction({"q"}), "high"), 1.0)
    tree = BehaviorTree(Parallel([low, high], 2), resources={"q"})
    table = tree.world.resources
    table.rho.update({low.id: 1.0, high.id: 3.0})
    table.waiting.update({low.id: frozenset("q"), high.id: frozenset("q")})
    tree.tick_root()
    assert table.holder("q") == high.id
    assert low.child.last_tick == -1


def test_equal_priority_goes_to_leftmost():
    left = ResourceSync(Action(BatteryAction({"q"}), "left"), 1.0)
    right = ResourceSync(Action(BatteryAction({"q"}), "right"), 1.0)
    tree = BehaviorTree(Parallel([left, right], 2), resources={"q"})
    tree.tick_root()
    assert tree.world.resources.holder("q") == left.id


def test_completion_releases_resources():
    tree, robots = _dining(0.0)
    for _ in range(10):
        tree.tick_root()
    assert robots[0].child.model.progress == 1.0
    tree.tick_root()
    assert tree.world.resources.holder("A") != robots[0].id


def test_table_rejects_double_acquire_and_unknown_symbols():
    table = ResourceTable({"A"})
    table.acquire(1, {"A"})
    with pytest.raises(RuntimeError):
        table.acquire(2, {"A"})
    with pytest.raises(KeyError):
        table.acquire(1, {"Z"})


def test_callable_priority_increment():
    g = constant_increment(2.5)
    assert g(None) == 2.5 and g.value == 2.5


@pytest.mark.parametrize("g", [0.0, 1.0])
def test_dining_mutual_exclusion_each_cycle(g):
    tree, robots = _dining(g)
    table = tree.world.resources
    trace = run_once(tree)
    for granted in trace.granted:
        wanted = [q for _, q in granted]
        for i in range(len(wanted)):
            for j in range(i + 1, len(wanted)):
                assert not wanted[i] & wanted[j]
    assert all(r.child.model.progress == 1.0 for r in robots)
    assert table.alpha == {} or set(table.alpha.values()) <= {r.id for r in robots}


# random contention: exclusion and, with aging, completion

contention = st.lists(
    st.sets(st.sampled_from("ABCDE"), min_size=1, max_size=3), min_size=2, max_size=6
)


@given(contention, st.sampled_from([0.0, 1.0]), st.floats(0.05, 0.5))
def test_random_contention_is_exclusive_and_finishes(requests, g, step):
    kids = [ResourceSync(Action(BatteryAction(q, step), f"r{i}"), g) for i, q in enumerate(requests)]
    tree = BehaviorTree(Parallel(kids, len(kids)), resources=set("ABCDE"))
    trace = run_once(tree)
    for granted in trace.granted:
        sets = [q for _, q in granted]
        assert sum(len(s) for s in sets) == len(frozenset().union(*sets))
    assert all(k.child.model.progress == 1.0 for k in kids)

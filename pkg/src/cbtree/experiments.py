"""Seeded Monte-Carlo experiments over generated tree documents.

Every experiment is a grid of cells; each cell is one ``.bt`` document run
``runs`` times.  Run ``r`` of every cell uses the seed ``run_seed(master, r)``,
so cells that differ only in synchronization settings see the same noise
(common random numbers) and can be compared run by run.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from .build import build_tree, run_seed
from .dsl import TreeDocument, parse
from .metrics import SummaryStats, TickTrace, mean_progress_distance, predictability_distance, summarize
from .models import ProfileAction
from .runner import run_once
from .sync import equidistant_barriers

Params = dict[str, float]


@dataclass
class ExperimentSpec:
    name: str
    runs: int = 10000
    seed: int = 0
    grid: dict[str, tuple[float, ...]] = field(default_factory=dict)
    max_cycles: int | None = None


@dataclass(frozen=True)
class RunRecord:
    cell: int
    params: tuple[tuple[str, float], ...]
    run: int
    seed: int
    metric: str
    value: float
    cycles: int


@dataclass(frozen=True)
class CellSummary:
    cell: int
    params: tuple[tuple[str, float], ...]
    metric: str
    stats: SummaryStats
    mean_cycles: float


@dataclass
class ExperimentResult:
    experiment: str
    keys: tuple[str, ...]
    records: list[RunRecord] = field(default_factory=list)
    summaries: list[CellSummary] = field(default_factory=list)
    traces: list[TickTrace] = field(default_factory=list)

    def _match(self, params, wanted: dict) -> bool:
        p = dict(params)
        return all(p.get(k) == v for k, v in wanted.items())

    def summary(self, metric: str | None = None, **params) -> CellSummary:
        hits = [
            s for s in self.summaries
            if self._match(s.params, params) and (metric is None or s.metric == metric)
        ]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} summaries match {params} / {metric}")
        return hits[0]

    def values(self, metric: str | None = None, **params) -> list[float]:
        return [
            r.value for r in self.records
            if self._match(r.params, params) and (metric is None or r.metric == metric)
        ]

    def cycles(self, metric: str | None = None, **params) -> list[int]:
        return [
            r.cycles for r in self.records
            if self._match(r.params, params) and (metric is None or r.metric == metric)
        ]


# -- tree generators ---------------------------------------------------------


def _fmt(x: float) -> str:
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


def two_action_source(a1: float, a2: float, noise: float, policy: str | None) -> str:
    """Parallel over two noisy linear actions, each behind the same sync group.

    ``policy`` is DSL text such as ``"relative 0.1"``; ``None`` drops the
    decorators altogether.
    """
    lines = [
        f"action x1 linear a={_fmt(a1)} noise={_fmt(noise)}",
        f"action x2 linear a={_fmt(a2)} noise={_fmt(noise)}",
    ]
    if policy is None:
        lines.append("(par 2 (act x1) (act x2))")
    else:
        lines.insert(0, f"group s {policy}")
        lines.append("(par 2 (psync s (act x1)) (psync s (act x2)))")
    return "\n".join(lines) + "\n"


def many_actions_source(n: int, a: float, noise: float, policy: str) -> str:
    lines = [f"group s {policy}"]
    lines += [f"action x{i + 1} linear a={_fmt(a)} noise={_fmt(noise)}" for i in range(n)]
    kids = " ".join(f"(psync s (act x{i + 1}))" for i in range(n))
    lines.append(f"(par {n} {kids})")
    return "\n".join(lines) + "\n"


def absolute_policy(count: int) -> str:
    return "absolute [" + " ".join(_fmt(b) for b in equidistant_barriers(int(count))) + "]"


def relative_policy(delta: float) -> str:
    return f"relative {_fmt(delta)}"


def predictability_source(profile_step: float, a: float, noise: float, delta: float) -> str:
    return (
        f"group s {relative_policy(delta)}\n"
        f"action profile profile step={_fmt(profile_step)}\n"
        f"action arm linear a={_fmt(a)} noise={_fmt(noise)}\n"
        "(par 2 (psync s (act profile)) (psync s (act arm)))\n"
    )


def dining_source(g: float) -> str:
    guard = "rsync zero" if g == 0 else f"rsync const {_fmt(g)}"
    return (
        "resources {A, B, C}\n"
        "action robot1 battery step=0.1 uses {A, B}\n"
        "action robot2 battery step=0.1 uses {B, C}\n"
        "action robot3 battery step=0.1 uses {C, A}\n"
        f"(par 3 ({guard} (act robot1)) ({guard} (act robot2)) ({guard} (act robot3)))\n"
    )


# -- experiment definitions --------------------------------------------------

Measure = Callable[[TickTrace, Params], dict[str, float]]


@dataclass(frozen=True)
class Design:
    defaults: dict[str, tuple[float, ...]]
    source: Callable[[Params], str]
    measure: Measure
    deterministic: bool = False


def _distance(trace: TickTrace, p: Params) -> dict[str, float]:
    return {"mean_distance": mean_progress_distance(trace, "s")}


def _predictability(trace: TickTrace, p: Params) -> dict[str, float]:
    reference = ProfileAction(p["profile"])
    out = {}
    for target in (0.25, 0.5, 0.75):
        t_hat = reference.expected_time(target, trace.dt)
        out[f"P@{_fmt(target)}"] = predictability_distance(trace, t_hat, target, "arm")
    return out


def _dining(trace: TickTrace, p: Params) -> dict[str, float]:
    out: dict[str, float] = {}
    for name, series in trace.progress.items():
        out[f"finish:{name}"] = float(next(k for k, v in zip(trace.cycles, series) if v >= 1.0))
    for q in ("A", "B", "C"):
        holders = [row.get(q) for row in trace.holders]
        out[f"handovers:{q}"] = float(sum(1 for x, y in zip(holders, holders[1:]) if x != y))
    return out


DESIGNS: dict[str, Design] = {
    "absolute": Design(
        {"noise": (0.005, 0.01, 0.015), "barriers": (0, 1, 3, 9), "a1": (0.03,), "a2": (0.02,)},
        lambda p: two_action_source(p["a1"], p["a2"], p["noise"], absolute_policy(p["barriers"])),
        _distance,
    ),
    "relative": Design(
        {"noise": (0.005, 0.01, 0.015), "delta": (1.0, 0.5, 0.2, 0.1), "a1": (0.03,), "a2": (0.02,)},
        lambda p: two_action_source(p["a1"], p["a2"], p["noise"], relative_policy(p["delta"])),
        _distance,
    ),
    "scaling-absolute": Design(
        {"children": (2, 4, 8, 16), "a": (0.03,), "noise": (0.015,), "barriers": (9,)},
        lambda p: many_actions_source(int(p["children"]), p["a"], p["noise"], absolute_policy(p["barriers"])),
        _distance,
    ),
    "scaling-relative": Design(
        {"children": (2, 4, 8, 16), "a": (0.03,), "noise": (0.015,), "delta": (0.1,)},
        lambda p: many_actions_source(int(p["children"]), p["a"], p["noise"], relative_policy(p["delta"])),
        _distance,
    ),
    "predictability": Design(
        {"noise": (0.005, 0.01, 0.015), "delta": (0.1, 0.2, 0.5, 1.0), "a": (0.2,), "profile": (0.1,)},
        lambda p: predictability_source(p["profile"], p["a"], p["noise"], p["delta"]),
        _predictability,
    ),
    "dining-greedy": Design({"g": (0.0,)}, lambda p: dining_source(p["g"]), _dining, True),
    "dining-fair": Design({"g": (1.0,)}, lambda p: dining_source(p["g"]), _dining, True),
}

EXPERIMENTS = tuple(DESIGNS)


COUNT_KEYS = {"barriers", "children"}


def _coerce(key: str, value: float) -> float:
    if key in COUNT_KEYS:
        if float(value) != int(value) or value < 0:
            raise ValueError(f"{key} must be a non-negative integer, got {value}")
        return int(value)
    return float(value)


def cells(name: str, grid: dict[str, Iterable[float]] | None = None) -> list[Params]:
    """Grid cells in row-major order of the experiment's parameter list."""
    design = DESIGNS[name]
    grid = dict(grid or {})
    unknown = set(grid) - set(design.defaults)
    if unknown:
        raise KeyError(f"{name} has no parameter(s) {', '.join(sorted(unknown))}")
    axes = {k: tuple(_coerce(k, x) for x in grid.get(k, v)) for k, v in design.defaults.items()}
    keys = list(axes)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(axes[k] for k in keys))]


def run_experiment(
    spec: ExperimentSpec,
    keep_traces: bool = False,
    progress: Callable[[int, Params], None] | None = None,
) -> ExperimentResult:
    """Run every cell of ``spec``.  Aborted runs propagate as :class:`AbortedRun`."""
    design = DESIGNS[spec.name]
    result = ExperimentResult(spec.name, tuple(design.defaults))
    runs = 1 if design.deterministic else spec.runs
    for index, params in enumerate(cells(spec.name, spec.grid)):
        if progress is not None:
            progress(index, params)
        doc = parse(design.source(params))
        frozen = tuple(params.items())
        per_metric: dict[str, list[float]] = {}
        cycles: list[int] = []
        for r in range(runs):
            seed = run_seed(spec.seed, r)
            trace = run_once(build_tree(doc, seed), spec.max_cycles, detail=design.deterministic or keep_traces)
            if keep_traces:
                result.traces.append(trace)
            cycles.append(trace.last_cycle)
            for metric, value in design.measure(trace, params).items():
                per_metric.setdefault(metric, []).append(value)
                result.records.append(RunRecord(index, frozen, r, seed, metric, value, trace.last_cycle))
        mean_cycles = sum(cycles) / len(cycles) if cycles else 0.0
        for metric, values in per_metric.items():
            result.summaries.append(CellSummary(index, frozen, metric, summarize(values), mean_cycles))
    return result


def simulate(source: str | TreeDocument, seed: int = 0, max_cycles: int | None = None, detail: bool = True) -> TickTrace:
    """Parse (if needed), build and run one tree."""
    doc = parse(source) if isinstance(source, str) else source
    return run_once(build_tree(doc, seed), max_cycles, detail)


# -- CSV ---------------------------------------------------------------------

STAT_FIELDS = ("n", "min", "q1", "median", "q3", "max", "iqr", "mean_cycles")


def _cell_text(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def csv_text(result: ExperimentResult) -> str:
    """Per-run rows followed by one summary row per (cell, metric)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("experiment", "row", "cell", *result.keys, "run", "seed", "metric", "value", "cycles", *STAT_FIELDS))
    blanks_stats = [""] * len(STAT_FIELDS)
    for r in result.records:
        p = dict(r.params)
        w.writerow(
            (result.experiment, "run", r.cell, *(_cell_text(p[k]) for k in result.keys),
             r.run, r.seed, r.metric, _cell_text(r.value), r.cycles, *blanks_stats)
        )
    for s in result.summaries:
        p = dict(s.params)
        st = s.stats
        w.writerow(
            (result.experiment, "summary", s.cell, *(_cell_text(p[k]) for k in result.keys),
             "", "", s.metric, "", "",
             st.n, *(_cell_text(v) for v in (st.min, st.q1, st.median, st.q3, st.max, st.iqr, s.mean_cycles)))
        )
    return buf.getvalue()


def emit_csv(result: ExperimentResult, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(result))
    return path


def trace_csv_text(trace: TickTrace) -> str:
    """One row per recorded cycle: progress of every action, then statuses."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    series = list(trace.progress)
    statuses = list(trace.status_labels)
    resources = sorted({q for row in trace.holders for q in row})
    header = ["cycle", "time", *(f"p:{s}" for s in series)]
    header += [f"status:{s}" for s in statuses]
    header += [f"holder:{q}" for q in resources]
    if trace.root_status:
        header.append("root")
    w.writerow(header)
    for i, k in enumerate(trace.cycles):
        row = [k, _cell_text(k * trace.dt)]
        row += [_cell_text(trace.progress[s][i]) for s in series]
        if trace.statuses:
            row += list(trace.statuses[i])
        if trace.holders:
            row += [trace.holders[i].get(q, "") for q in resources]
        if trace.root_status:
            row.append(trace.root_status[i])
        w.writerow(row)
    return buf.getvalue()

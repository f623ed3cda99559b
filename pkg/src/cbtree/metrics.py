"""Synchronization measures and boxplot statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .sync import PROGRESS_EPS


@dataclass
class TickTrace:
    """Per-cycle record of a run; row 0 is the state before the first tick.

    ``progress`` maps a node label to its progress series, ``groups`` maps a
    sync-group name to one tuple of member progresses per cycle.  Status and
    holder columns are only filled when the run records them.
    """

    dt: float = 1.0
    cycles: list[int] = field(default_factory=list)
    progress: dict[str, list[float]] = field(default_factory=dict)
    groups: dict[str, list[tuple[float, ...]]] = field(default_factory=dict)
    statuses: list[tuple[str, ...]] = field(default_factory=list)
    status_labels: tuple[str, ...] = ()
    holders: list[dict[str, str]] = field(default_factory=list)
    granted: list[list[tuple[str, frozenset[str]]]] = field(default_factory=list)
    root_status: list[str] = field(default_factory=list)

    @property
    def times(self) -> list[float]:
        return [k * self.dt for k in self.cycles]

    @property
    def last_cycle(self) -> int:
        return self.cycles[-1] if self.cycles else 0

    def __len__(self) -> int:
        return len(self.cycles)

    def members(self, group: str | None = None) -> list[tuple[float, ...]]:
        """Rows of member progress for ``group``, or for every tracked action."""
        if group is not None:
            return self.groups[group]
        series = list(self.progress.values())
        return list(zip(*series)) if series else []


@dataclass(frozen=True)
class SummaryStats:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    n: int

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1


def progress_distance(progresses: Sequence[float]) -> float:
    """Sum of absolute progress gaps over unordered member pairs."""
    xs = sorted(progresses)
    n = len(xs)
    # each gap between neighbours is crossed by i * (n - i) pairs; summing
    # non-negative gaps keeps the result exactly 0 for equal inputs
    return float(sum((xs[i] - xs[i - 1]) * i * (n - i) for i in range(1, n)))


def _completion_row(rows: Sequence[Sequence[float]]) -> int:
    for k, row in enumerate(rows):
        if row and all(p >= 1.0 - PROGRESS_EPS for p in row):
            return k
    return len(rows) - 1


def mean_progress_distance(trace: TickTrace, group: str | None = None) -> float:
    """Average distance over cycles 1..K, K being the cycle all members finish.

    The initial row is excluded unless it is the only one.
    """
    rows = trace.members(group)
    if not rows:
        return 0.0
    end = _completion_row(rows)
    window = rows[1 : end + 1] if end >= 1 else rows[:1]
    return sum(progress_distance(r) for r in window) / len(window)


def predictability_distance(
    trace: TickTrace,
    reference: Callable[[float], float] | float,
    target: float,
    series: str | None = None,
) -> float:
    """Gap between when ``series`` came closest to ``target`` and when it should have.

    ``reference`` is either the expected time itself or a function of the
    target progress.  The earliest cycle wins ties.
    """
    if not 0.0 <= target <= 1.0:
        raise ValueError(f"target progress must be in [0, 1], got {target}")
    if not trace.cycles:
        raise ValueError("empty trace")
    if series is None:
        if len(trace.progress) != 1:
            raise ValueError("trace tracks several series; pass series=")
        series = next(iter(trace.progress))
    values = trace.progress[series]
    best_k, best_d = 0, abs(values[0] - target)
    for k in range(1, len(values)):
        d = abs(values[k] - target)
        if d < best_d - PROGRESS_EPS:
            best_k, best_d = k, d
    actual = trace.cycles[best_k] * trace.dt
    expected = reference(target) if callable(reference) else float(reference)
    return abs(actual - expected)


def summarize(samples: Sequence[float]) -> SummaryStats:
    """Five-number summary with linearly interpolated quartiles."""
    if len(samples) == 0:
        raise ValueError("cannot summarize an empty sample")
    arr = np.asarray(samples, dtype=float)
    q = np.percentile(arr, [0, 25, 50, 75, 100])
    return SummaryStats(float(q[0]), float(q[1]), float(q[2]), float(q[3]), float(q[4]), int(arr.size))

"""Behavior trees with progress barriers and exclusive resource allocation."""

from .build import build_tree
from .core import (
    FAILURE,
    RUNNING,
    SUCCESS,
    Action,
    BehaviorTree,
    Condition,
    ConfigurationError,
    Fallback,
    MemoryFallback,
    MemorySequence,
    NodeStatus,
    Parallel,
    Sequence,
    halt,
    tick,
)
from .decorators import ProgressSync, ResourceSync
from .dsl import DSLError, parse, print_document, validate
from .metrics import TickTrace, mean_progress_distance, predictability_distance, progress_distance, summarize
from .runner import AbortedRun, run_once
from .sync import Absolute, Relative, SyncGroup

__all__ = [
    "FAILURE", "RUNNING", "SUCCESS", "Absolute", "AbortedRun", "Action", "BehaviorTree",
    "Condition", "ConfigurationError", "DSLError", "Fallback", "MemoryFallback",
    "MemorySequence", "NodeStatus", "Parallel", "ProgressSync", "Relative", "ResourceSync",
    "Sequence", "SyncGroup", "TickTrace", "build_tree", "halt", "mean_progress_distance",
    "parse", "predictability_distance", "print_document", "progress_distance", "run_once",
    "summarize", "tick", "validate",
]

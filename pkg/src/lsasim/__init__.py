"""Deterministic simulator for shared-spectrum allocation between licensed
incumbents and competing mobile operators.

The package layers, bottom-up: windowed allocation histories and traces
(`core`), single-incumbent allocators driven by a windowed priority index
(`allocation`), violation-aware enforcement around the fair allocator
(`enforcement`), multi-incumbent coordination protocols (`protocols`),
evaluation metrics (`metrics`), the seeded scenario engine (`sim`), built-in
scenario presets (`presets`), and a file-in/file-out command line (`cli`).
"""

from .allocation import (
    EXCLUDED,
    PriorityTracker,
    compute_pi,
    fair_allocate,
    priority_vector,
    resolve_tie_keys,
    round_robin_allocate,
    strictly_fair_allocate,
)
from .core import TOL, AllocationRecord, AllocationTrace, Coalition, HistoryWindow
from .enforcement import (
    EnforcementConfig,
    Enforcer,
    PenaltyFunction,
    ViolationLedger,
    apply_penalty,
    violation_ratio,
    blended_priority,
)
from .metrics import (
    MetricReport,
    build_report,
    dissatisfaction,
    jain_index,
    mean_share,
    moving_average,
    unallocated_factor,
)
from .protocols import (
    InstantResult,
    RoundState,
    run_mcs,
    run_mcs_single_assign_variant,
    run_mcs_single_incumbent_variant,
    run_ooc,
    run_oos,
    run_oos_multi_assign_variant,
)
from .presets import DEFAULT_SEED, PRESET_NAMES, describe_preset, get_preset
from .sim import (
    ConfigError,
    DemandModel,
    RunResult,
    ScenarioConfig,
    run_scenario,
    sweep,
    warmup,
)

__version__ = "0.1.0"

__all__ = [
    "AllocationRecord",
    "AllocationTrace",
    "Coalition",
    "ConfigError",
    "DEFAULT_SEED",
    "DemandModel",
    "EXCLUDED",
    "EnforcementConfig",
    "Enforcer",
    "HistoryWindow",
    "InstantResult",
    "MetricReport",
    "PRESET_NAMES",
    "PenaltyFunction",
    "PriorityTracker",
    "RoundState",
    "RunResult",
    "ScenarioConfig",
    "TOL",
    "ViolationLedger",
    "apply_penalty",
    "build_report",
    "violation_ratio",
    "compute_pi",
    "blended_priority",
    "describe_preset",
    "dissatisfaction",
    "fair_allocate",
    "get_preset",
    "jain_index",
    "mean_share",
    "moving_average",
    "priority_vector",
    "resolve_tie_keys",
    "round_robin_allocate",
    "run_mcs",
    "run_mcs_single_assign_variant",
    "run_mcs_single_incumbent_variant",
    "run_ooc",
    "run_oos",
    "run_oos_multi_assign_variant",
    "run_scenario",
    "strictly_fair_allocate",
    "sweep",
    "unallocated_factor",
    "warmup",
]

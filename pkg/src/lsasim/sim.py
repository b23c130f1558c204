"""Scenario configuration and the discrete-time simulation loop.

A scenario fixes the cast (operators, incumbents, coalitions), the per-instant
demand and supply processes, the allocation protocol, and a seed.  One master
seed feeds four named sub-streams (demands, tie-breaks, violations, warm-up
priorities), so regenerating a run with the same configuration reproduces the
trace bit for bit, and changing one consumer leaves the others untouched.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .allocation import (
    PriorityTracker,
    fair_allocate,
    round_robin_allocate,
    strictly_fair_allocate,
)
from .core import TOL, AllocationTrace, Coalition
from .enforcement import EnforcementConfig, Enforcer, PenaltyFunction
from .metrics import MetricReport, build_report
from .protocols import (
    RoundState,
    run_mcs,
    run_mcs_single_assign_variant,
    run_mcs_single_incumbent_variant,
    run_ooc,
    run_oos,
    run_oos_multi_assign_variant,
)

SINGLE_INCUMBENT_PROTOCOLS = ("fair_l1", "strict_fair", "round_robin", "enforced_l1")
MULTI_INCUMBENT_PROTOCOLS = (
    "oos",
    "ooc",
    "mcs",
    "oos_multi_assign",
    "mcs_single_incumbent",
    "mcs_single_assign",
)
PROTOCOLS = SINGLE_INCUMBENT_PROTOCOLS + MULTI_INCUMBENT_PROTOCOLS

_MULTI_RUNNERS = {
    "oos": run_oos,
    "ooc": run_ooc,
    "mcs": run_mcs,
    "oos_multi_assign": run_oos_multi_assign_variant,
    "mcs_single_incumbent": run_mcs_single_incumbent_variant,
    "mcs_single_assign": run_mcs_single_assign_variant,
}

SWEEP_PARAMETERS = ("fairness_weight", "exponent", "seed")

# Violation ledgers start as if each operator already carried this many
# assignments at its configured violation rate.  A fresh ratio would jump to
# 1.0 on one unlucky early draw and freeze the operator out for good; the
# prior keeps every ratio near its configured level from the first instant.
VIOLATION_PRIOR_ASSIGNMENTS = 50


class ConfigError(ValueError):
    """A scenario configuration broke a documented constraint."""


@dataclass(frozen=True)
class DemandModel:
    """Per-operator demand process: a constant or a uniform pick from a list."""

    kind: str
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.kind not in ("fixed", "choice"):
            raise ConfigError(f"demands: unknown model kind {self.kind!r}")
        if not self.values:
            raise ConfigError("demands: a model needs at least one value")
        if self.kind == "fixed" and len(self.values) != 1:
            raise ConfigError("demands: fixed model takes exactly one value")
        for v in self.values:
            if not np.isfinite(v) or v < 0:
                raise ConfigError("demands: values must be finite and non-negative")

    @classmethod
    def fixed(cls, value: float) -> "DemandModel":
        return cls("fixed", (float(value),))

    @classmethod
    def choice(cls, values) -> "DemandModel":
        return cls("choice", tuple(float(v) for v in values))

    def sample(self, rng: np.random.Generator) -> float:
        if self.kind == "fixed":
            return self.values[0]
        # always exactly one draw, so the stream position never depends on
        # how many values the list holds
        index = min(int(rng.random() * len(self.values)), len(self.values) - 1)
        return self.values[index]


@dataclass(frozen=True)
class ScenarioConfig:
    protocol: str
    n_operators: int
    n_incumbents: int
    window: int
    instants: int
    seed: int
    demands: tuple[DemandModel, ...]
    supplies: tuple[float, ...] | None = None
    supply_schedule: tuple[tuple[float, ...], ...] | None = None
    enforcement: EnforcementConfig | None = None
    violation_probs: tuple[float, ...] | None = None
    coalitions: tuple[tuple[int, ...], ...] | None = None
    emit_moving_average: bool = False

    # -- validation ---------------------------------------------------------

    def validate(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ConfigError(
                f"protocol: {self.protocol!r} is not one of {', '.join(PROTOCOLS)}"
            )
        if self.n_operators < 1:
            raise ConfigError("operators: need at least one operator")
        if self.n_incumbents < 1:
            raise ConfigError("incumbents: need at least one incumbent")
        if self.protocol in SINGLE_INCUMBENT_PROTOCOLS and self.n_incumbents != 1:
            raise ConfigError(
                f"incumbents: protocol {self.protocol} runs with exactly one incumbent"
            )
        if self.window < 1:
            raise ConfigError("window: must be a positive number of slots")
        if self.instants < self.window:
            raise ConfigError("instants: must be at least the window length")
        if self.seed < 0:
            raise ConfigError("seed: must be non-negative")
        if (self.supplies is None) == (self.supply_schedule is None):
            raise ConfigError("supplies: give either a constant list or a schedule")
        if self.supplies is not None:
            if len(self.supplies) != self.n_incumbents:
                raise ConfigError("supplies: one value per incumbent is required")
            for b in self.supplies:
                if not np.isfinite(b) or b < 0:
                    raise ConfigError("supplies: must be finite and non-negative")
        else:
            sched = self.supply_schedule
            if len(sched) != self.instants:
                raise ConfigError("supplies: schedule needs one row per instant")
            for row in sched:
                if len(row) != self.n_incumbents:
                    raise ConfigError("supplies: schedule rows need one value per incumbent")
                for b in row:
                    if not np.isfinite(b) or b < 0:
                        raise ConfigError("supplies: must be finite and non-negative")
        if len(self.demands) != self.n_operators:
            raise ConfigError("demands: one model per operator is required")
        if self.enforcement is not None and self.protocol != "enforced_l1":
            raise ConfigError("enforcement: only meaningful for protocol enforced_l1")
        if self.violation_probs is not None:
            if self.protocol != "enforced_l1":
                raise ConfigError("violation_probs: only meaningful for protocol enforced_l1")
            if len(self.violation_probs) != self.n_operators:
                raise ConfigError("violation_probs: one probability per operator")
            for p in self.violation_probs:
                if not 0 <= p <= 1:
                    raise ConfigError("violation_probs: must lie in [0, 1]")
        if self.coalitions is not None:
            if len(self.coalitions) != self.n_incumbents:
                raise ConfigError("coalitions: one member list per incumbent")
            for members in self.coalitions:
                if not members:
                    raise ConfigError("coalitions: member lists must not be empty")
                if len(set(members)) != len(members):
                    raise ConfigError("coalitions: member lists must not repeat operators")
                for i in members:
                    if not 0 <= i < self.n_operators:
                        raise ConfigError(f"coalitions: operator index {i} out of range")

    # -- derived views ------------------------------------------------------

    def supplies_at(self, instant: int) -> np.ndarray:
        if self.supplies is not None:
            return np.asarray(self.supplies, dtype=float)
        return np.asarray(self.supply_schedule[instant], dtype=float)

    def coalition_objects(self) -> list[Coalition]:
        if self.coalitions is None:
            members = tuple(range(self.n_operators))
            return [Coalition(j, members) for j in range(self.n_incumbents)]
        return [
            Coalition(j, tuple(members))
            for j, members in enumerate(self.coalitions)
        ]

    def enforcement_or_default(self) -> EnforcementConfig:
        return self.enforcement if self.enforcement is not None else EnforcementConfig()

    # -- dict round trip ----------------------------------------------------

    def to_dict(self) -> dict:
        out: dict = {
            "protocol": self.protocol,
            "operators": self.n_operators,
            "incumbents": self.n_incumbents,
            "window": self.window,
            "instants": self.instants,
            "seed": self.seed,
        }
        if self.supplies is not None:
            out["supplies"] = list(self.supplies)
        else:
            out["supplies"] = [list(row) for row in self.supply_schedule]
        out["demands"] = [
            {"fixed": m.values[0]} if m.kind == "fixed" else {"choice": list(m.values)}
            for m in self.demands
        ]
        if self.enforcement is not None:
            enf = self.enforcement
            penalty: dict = {"kind": enf.penalty.kind}
            if enf.penalty.kind == "power":
                penalty["exponent"] = enf.penalty.exponent
            out["enforcement"] = {
                "fairness_weight": enf.fairness_weight,
                "exclusion_cutoff": enf.exclusion_cutoff,
                "cooloff": enf.cooloff_slots,
                "penalty": penalty,
            }
        if self.violation_probs is not None:
            out["violation_probs"] = list(self.violation_probs)
        if self.coalitions is not None:
            out["coalitions"] = [list(members) for members in self.coalitions]
        if self.emit_moving_average:
            out["emit_moving_average"] = True
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("config: expected a mapping at the top level")
        known = {
            "protocol",
            "operators",
            "incumbents",
            "window",
            "instants",
            "seed",
            "supplies",
            "demands",
            "enforcement",
            "violation_probs",
            "coalitions",
            "emit_moving_average",
        }
        for key in data:
            if key not in known:
                raise ConfigError(f"config: unknown key {key!r}")
        for key in ("protocol", "operators", "incumbents", "window", "instants", "supplies", "demands"):
            if key not in data:
                raise ConfigError(f"config: missing required key {key!r}")

        supplies, schedule = _parse_supplies(data["supplies"])
        cfg = cls(
            protocol=_expect_str(data["protocol"], "protocol"),
            n_operators=_expect_int(data["operators"], "operators"),
            n_incumbents=_expect_int(data["incumbents"], "incumbents"),
            window=_expect_int(data["window"], "window"),
            instants=_expect_int(data["instants"], "instants"),
            seed=_expect_int(data.get("seed", 0), "seed"),
            demands=tuple(_parse_demand(entry) for entry in _expect_list(data["demands"], "demands")),
            supplies=supplies,
            supply_schedule=schedule,
            enforcement=_parse_enforcement(data.get("enforcement")),
            violation_probs=(
                tuple(float(p) for p in _expect_list(data["violation_probs"], "violation_probs"))
                if "violation_probs" in data
                else None
            ),
            coalitions=(
                tuple(
                    tuple(_expect_int(i, "coalitions") for i in _expect_list(row, "coalitions"))
                    for row in _expect_list(data["coalitions"], "coalitions")
                )
                if "coalitions" in data
                else None
            ),
            emit_moving_average=bool(data.get("emit_moving_average", False)),
        )
        cfg.validate()
        return cfg

    def with_updates(self, **changes) -> "ScenarioConfig":
        cfg = dataclasses.replace(self, **changes)
        cfg.validate()
        return cfg


def _expect_int(value, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{field}: expected an integer, got {value!r}")
    return value


def _expect_str(value, field: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{field}: expected a string, got {value!r}")
    return value


def _expect_list(value, field: str) -> list:
    if not isinstance(value, list):
        raise ConfigError(f"{field}: expected a list, got {value!r}")
    return value


def _parse_supplies(raw):
    rows = _expect_list(raw, "supplies")
    if rows and isinstance(rows[0], list):
        return None, tuple(tuple(float(b) for b in _expect_list(row, "supplies")) for row in rows)
    return tuple(float(b) for b in rows), None


def _parse_demand(entry) -> DemandModel:
    if not isinstance(entry, dict) or len(entry) != 1:
        raise ConfigError(
            "demands: each entry must be a one-key mapping, {fixed: v} or {choice: [..]}"
        )
    (kind, value), = entry.items()
    if kind == "fixed":
        return DemandModel.fixed(float(value))
    if kind == "choice":
        return DemandModel.choice(_expect_list(value, "demands"))
    raise ConfigError(f"demands: unknown model kind {kind!r}")


def _parse_enforcement(raw) -> EnforcementConfig | None:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ConfigError("enforcement: expected a mapping")
    known = {"fairness_weight", "exclusion_cutoff", "cooloff", "penalty"}
    for key in raw:
        if key not in known:
            raise ConfigError(f"enforcement: unknown key {key!r}")
    penalty = PenaltyFunction()
    if "penalty" in raw:
        node = raw["penalty"]
        if not isinstance(node, dict):
            raise ConfigError("enforcement.penalty: expected a mapping")
        for key in node:
            if key not in {"kind", "exponent"}:
                raise ConfigError(f"enforcement.penalty: unknown key {key!r}")
        kind = node.get("kind", "linear")
        try:
            penalty = PenaltyFunction(kind, float(node.get("exponent", 1.0)))
        except ValueError as exc:
            raise ConfigError(f"enforcement.penalty: {exc}") from exc
    try:
        return EnforcementConfig(
            fairness_weight=float(raw.get("fairness_weight", 1.0)),
            exclusion_cutoff=float(raw.get("exclusion_cutoff", 1.0)),
            cooloff_slots=_expect_int(raw.get("cooloff", 0), "enforcement.cooloff"),
            penalty=penalty,
        )
    except ValueError as exc:
        raise ConfigError(f"enforcement: {exc}") from exc


@dataclass
class RunResult:
    """One completed run: the configuration, its trace, and summary metrics.

    `rounds` holds the per-instant round count for coordination protocols;
    `fictitious` holds the (T, N) penalty-free shadow allocations recorded by
    enforced runs (the stream that feeds priority histories).
    """

    config: ScenarioConfig
    trace: AllocationTrace
    report: MetricReport
    rounds: np.ndarray | None = None
    fictitious: np.ndarray | None = None


def warmup(cfg: ScenarioConfig, rng: np.random.Generator) -> list[PriorityTracker]:
    """Build one pre-filled tracker per incumbent.

    Each tracker starts with `window` zero-offer slots and a per-operator
    warm-start priority drawn uniformly from [0, 1]; the draw stands in for
    the windowed mean until enough real slots accumulate.
    """
    return [
        PriorityTracker.warm(cfg.n_operators, cfg.window, rng.random(cfg.n_operators))
        for _ in range(cfg.n_incumbents)
    ]


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    """Execute one scenario and return its trace plus metrics."""
    cfg.validate()
    n, m, t_max = cfg.n_operators, cfg.n_incumbents, cfg.instants
    streams = np.random.SeedSequence(cfg.seed).spawn(4)
    demand_rng = np.random.default_rng(streams[0])
    tie_rng = np.random.default_rng(streams[1])
    violation_rng = np.random.default_rng(streams[2])
    warmup_rng = np.random.default_rng(streams[3])

    trackers = warmup(cfg, warmup_rng)
    coalitions = cfg.coalition_objects()
    multi = cfg.protocol in MULTI_INCUMBENT_PROTOCOLS

    demands_t = np.zeros((t_max, n))
    offered_t = np.zeros((t_max, m))
    alloc_t = np.zeros((t_max, n, m))
    violations_t = np.zeros((t_max, n), dtype=bool)
    rounds_t = np.zeros(t_max, dtype=np.int64) if multi else None

    enforcer = None
    probs = None
    fictitious_t = None
    if cfg.protocol == "enforced_l1":
        enforcer = Enforcer(cfg.enforcement_or_default(), trackers[0])
        probs = np.asarray(
            cfg.violation_probs
            if cfg.violation_probs is not None
            else np.zeros(n),
            dtype=float,
        )
        if cfg.violation_probs is not None:
            enforcer.ledger.n_assigned[:] = VIOLATION_PRIOR_ASSIGNMENTS
            enforcer.ledger.n_violated[:] = np.round(
                VIOLATION_PRIOR_ASSIGNMENTS * probs
            ).astype(np.int64)
        fictitious_t = np.zeros((t_max, n))
    rr_start = 0

    for t in range(t_max):
        demand = np.array([model.sample(demand_rng) for model in cfg.demands])
        supply = cfg.supplies_at(t)
        demands_t[t] = demand
        offered_t[t] = supply

        if not multi:
            offered = float(supply[0])
            if cfg.protocol == "fair_l1":
                keys = tie_rng.random(n)
                alloc = fair_allocate(trackers[0].priorities(), demand, offered, keys)
                trackers[0].push(alloc, offered)
            elif cfg.protocol == "strict_fair":
                alloc = strictly_fair_allocate(trackers[0].priorities(), demand, offered)
                trackers[0].push(alloc, offered)
            elif cfg.protocol == "round_robin":
                alloc, rr_start = round_robin_allocate(rr_start, demand, offered)
            else:  # enforced_l1
                keys = tie_rng.random(n)
                alloc, fictitious = enforcer.allocate(demand, offered, keys)
                fictitious_t[t] = fictitious
                for i in range(n):
                    if alloc[i] > TOL and violation_rng.random() < probs[i]:
                        enforcer.record_violation(i)
                        violations_t[t, i] = True
            alloc_t[t, :, 0] = alloc
        else:
            op_keys = tie_rng.random(n)
            offer_keys = tie_rng.random((n, m))
            prio = np.vstack([tracker.priorities() for tracker in trackers])
            state = RoundState.fresh(
                demand, supply, prio, coalitions, op_keys, offer_keys
            )
            result = _MULTI_RUNNERS[cfg.protocol](state)
            alloc_t[t] = result.allocated
            rounds_t[t] = result.rounds
            for j, tracker in enumerate(trackers):
                tracker.push(result.allocated[:, j], float(supply[j]))

    trace = AllocationTrace(demands_t, offered_t, alloc_t, violations_t)
    trace.validate()
    report = build_report(trace, cfg.window)
    return RunResult(
        config=cfg,
        trace=trace,
        report=report,
        rounds=rounds_t,
        fictitious=fictitious_t,
    )


def sweep(cfg: ScenarioConfig, parameter: str, values) -> list[RunResult]:
    """Run the scenario once per value of one swept parameter.

    Weight and exponent sweeps reuse the base seed for every run, so all runs
    see the same demand draws and differ only through the swept parameter;
    for seed sweeps each value is itself the seed.  A one-value fairness_weight or
    exponent sweep therefore reproduces the plain run exactly.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(
            f"sweep: parameter must be one of {', '.join(SWEEP_PARAMETERS)}"
        )
    values = list(values)
    if not values:
        raise ConfigError("sweep: at least one value is required")
    if parameter in ("fairness_weight", "exponent") and cfg.protocol != "enforced_l1":
        raise ConfigError(f"sweep: {parameter} applies only to protocol enforced_l1")

    results = []
    for value in values:
        if parameter == "seed":
            run_cfg = cfg.with_updates(seed=int(value))
        else:
            enf = cfg.enforcement_or_default()
            if parameter == "fairness_weight":
                enf = dataclasses.replace(enf, fairness_weight=float(value))
            else:
                enf = dataclasses.replace(
                    enf, penalty=PenaltyFunction("power", float(value))
                )
            run_cfg = cfg.with_updates(enforcement=enf)
        results.append(run_scenario(run_cfg))
    return results

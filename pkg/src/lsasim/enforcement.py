"""Compliance layer: violation bookkeeping, penalties, and selection priorities.

Operators that break lease terms accumulate a penalty index, the fraction of
their past assignments that were violated.  The selection priority blends the
fairness priority with a penalty transform; operators whose transformed
penalty exceeds a threshold are barred from the allocation entirely.  A
shadow ledger runs the penalty-free allocation in parallel so that punishing
an operator does not feed back into the fairness history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .allocation import (
    EXCLUDED,
    PriorityTracker,
    fair_allocate,
    resolve_tie_keys,
)
from .core import TOL

__all__ = [
    "EXCLUDED",
    "PenaltyFunction",
    "EnforcementConfig",
    "ViolationLedger",
    "apply_penalty",
    "violation_ratio",
    "blended_priority",
    "Enforcer",
]


@dataclass(frozen=True)
class PenaltyFunction:
    """Monotone map from penalty index to penalty weight on [0, 1]."""

    kind: str = "linear"
    exponent: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "power"):
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.kind == "power" and not self.exponent > 0:
            raise ValueError("power penalty needs a positive exponent")

    def __call__(self, ratio):
        return apply_penalty(self, ratio)


def apply_penalty(penalty: PenaltyFunction, ratio):
    """Evaluate the penalty transform; accepts scalars or arrays in [0, 1]."""
    x = np.asarray(ratio, dtype=float)
    if np.any(x < -TOL) or np.any(x > 1 + TOL):
        raise ValueError("penalty index must lie in [0, 1]")
    if penalty.kind == "linear":
        out = x
    else:
        out = x**penalty.exponent
    return float(out) if np.ndim(ratio) == 0 else out


@dataclass(frozen=True)
class EnforcementConfig:
    fairness_weight: float = 1.0
    exclusion_cutoff: float = 1.0
    cooloff_slots: int = 0
    penalty: PenaltyFunction = field(default_factory=PenaltyFunction)

    def __post_init__(self) -> None:
        if not 0.0 <= self.fairness_weight <= 1.0:
            raise ValueError("fairness_weight must lie in [0, 1]")
        if not 0.0 < self.exclusion_cutoff <= 1.0:
            raise ValueError("exclusion_cutoff must lie in (0, 1]")
        if self.cooloff_slots < 0:
            raise ValueError("cooloff_slots must be non-negative")


class ViolationLedger:
    """Cumulative per-operator assignment and violation counters."""

    def __init__(self, n_operators: int) -> None:
        if n_operators < 1:
            raise ValueError("need at least one operator")
        self.n_assigned = np.zeros(n_operators, dtype=np.int64)
        self.n_violated = np.zeros(n_operators, dtype=np.int64)

    @property
    def n_operators(self) -> int:
        return self.n_assigned.shape[0]

    def record_assignments(self, assigned_mask) -> None:
        mask = np.asarray(assigned_mask, dtype=bool)
        if mask.shape != self.n_assigned.shape:
            raise ValueError("assignment mask has the wrong length")
        self.n_assigned[mask] += 1

    def record_violation(self, operator: int) -> None:
        if not 0 <= operator < self.n_operators:
            raise ValueError("operator index out of range")
        if self.n_violated[operator] + 1 > self.n_assigned[operator]:
            raise ValueError("violations cannot outnumber assignments")
        self.n_violated[operator] += 1

    def penalty_index(self) -> np.ndarray:
        """Violated fraction of past assignments, zero with no assignments."""
        out = np.zeros(self.n_operators)
        held = self.n_assigned > 0
        out[held] = self.n_violated[held] / self.n_assigned[held]
        return out


def violation_ratio(ledger: ViolationLedger, operator: int) -> float:
    if not 0 <= operator < ledger.n_operators:
        raise ValueError("operator index out of range")
    if ledger.n_assigned[operator] == 0:
        return 0.0
    return float(ledger.n_violated[operator] / ledger.n_assigned[operator])


def blended_priority(prio: float, ratio: float, cfg: EnforcementConfig) -> float:
    """Blend fairness priority with the penalty weight, or exclude.

    Returns fairness_weight * prio + (1 - fairness_weight) * f(ratio) while f(ratio) stays at or
    below the threshold, and EXCLUDED (infinity) beyond it.
    """
    weight = apply_penalty(cfg.penalty, ratio)
    if weight > cfg.exclusion_cutoff + TOL:
        return EXCLUDED
    return cfg.fairness_weight * prio + (1.0 - cfg.fairness_weight) * weight


class Enforcer:
    """Runs the compliance-weighted allocation next to its penalty-free shadow.

    The shadow (fictitious) allocation uses fairness priorities alone and is
    the only thing pushed into the priority history, so with fairness_weight = 1 the
    real allocation reproduces the plain fair run slot for slot.  Assignment
    counters move only on real grants.  Excluded operators sit out the
    configured number of cool-off instants before being reconsidered.
    """

    def __init__(self, cfg: EnforcementConfig, fictitious: PriorityTracker) -> None:
        self.cfg = cfg
        self.fictitious = fictitious
        self.ledger = ViolationLedger(fictitious.history.n_operators)
        self._cooloff = np.zeros(fictitious.history.n_operators, dtype=np.int64)

    def selection_priorities(self) -> np.ndarray:
        prio = self.fictitious.priorities()
        weight = apply_penalty(self.cfg.penalty, self.ledger.penalty_index())
        sel = np.where(
            weight <= self.cfg.exclusion_cutoff + TOL,
            self.cfg.fairness_weight * prio + (1.0 - self.cfg.fairness_weight) * weight,
            EXCLUDED,
        )
        sel[self._cooloff > 0] = EXCLUDED
        return sel

    def allocate(self, demand, offered: float, tie_break) -> tuple[np.ndarray, np.ndarray]:
        """One instant: returns (real allocation, fictitious allocation).

        Both allocations share the same tie-break keys, drawn once if a
        Generator is passed.
        """
        n = self.fictitious.history.n_operators
        keys = resolve_tie_keys(tie_break, n)
        prio = self.fictitious.priorities()
        fict = fair_allocate(prio, demand, offered, keys)
        sel = self.selection_priorities()
        real = fair_allocate(sel, demand, offered, keys)

        self.fictitious.push(fict, offered)
        self.ledger.record_assignments(real > TOL)
        fresh_exclusion = ~np.isfinite(sel) & (self._cooloff == 0)
        cooling = self._cooloff > 0
        self._cooloff[cooling] -= 1
        if self.cfg.cooloff_slots > 0:
            self._cooloff[fresh_exclusion] = self.cfg.cooloff_slots
        return real, fict

    def record_violation(self, operator: int) -> None:
        self.ledger.record_violation(operator)

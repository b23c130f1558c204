"""Domain types and history bookkeeping for shared-spectrum allocation runs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

# Absolute tolerance for every bandwidth comparison in the package.
TOL = 1e-9

# Operators and incumbents are addressed by dense integer indices.
OperatorId = int
IncumbentId = int


@dataclass(frozen=True)
class Coalition:
    """The set of operators allowed to lease spectrum from one incumbent."""

    incumbent: IncumbentId
    members: tuple[OperatorId, ...]

    def __post_init__(self) -> None:
        if self.incumbent < 0:
            raise ValueError("incumbent index must be non-negative")
        if not self.members:
            raise ValueError("coalition must have at least one member")
        if len(set(self.members)) != len(self.members):
            raise ValueError("coalition members must be distinct")
        if any(m < 0 for m in self.members):
            raise ValueError("operator indices must be non-negative")


class HistoryWindow:
    """Fixed-length ring of recent allocation slots for one incumbent.

    Each slot stores the bandwidth granted to every operator together with
    the bandwidth the incumbent had on offer that slot.  A slot whose offer
    is zero carries all-zero grants and contributes zero share.  Per-operator
    share sums are maintained incrementally so priority reads are O(N).
    """

    def __init__(self, n_operators: int, window: int) -> None:
        if n_operators < 1:
            raise ValueError("need at least one operator")
        if window < 1:
            raise ValueError("window must be a positive number of slots")
        self._n = int(n_operators)
        self._w = int(window)
        self._alloc = np.zeros((self._w, self._n))
        self._totals = np.zeros(self._w)
        self._shares = np.zeros((self._w, self._n))
        self._share_sums = np.zeros(self._n)
        self._pos = 0
        self._filled = 0

    @property
    def n_operators(self) -> int:
        return self._n

    @property
    def window(self) -> int:
        return self._w

    @property
    def slots_filled(self) -> int:
        return self._filled

    def __len__(self) -> int:
        return self._filled

    @property
    def share_sums(self) -> np.ndarray:
        """Per-operator sum of buffered slot shares.  Treat as read-only."""
        return self._share_sums

    def push_slot(self, allocations, incumbent_total: float) -> None:
        """Append one slot, evicting the oldest once the ring is full.

        Rejects negative amounts, a grant sum above the offered total, and
        nonzero grants against a zero offer.
        """
        amounts = np.asarray(allocations, dtype=float)
        if amounts.shape != (self._n,):
            raise ValueError(
                f"expected {self._n} per-operator amounts, got shape {amounts.shape}"
            )
        total = float(incumbent_total)
        if not np.isfinite(total) or total < -TOL:
            raise ValueError("incumbent total must be finite and non-negative")
        if not np.all(np.isfinite(amounts)):
            raise ValueError("allocations must be finite")
        if np.any(amounts < -TOL):
            raise ValueError("allocations must be non-negative")
        if amounts.sum() > total + TOL:
            raise ValueError(
                f"allocated {amounts.sum():.12g} exceeds offered {total:.12g}"
            )
        if total <= TOL:
            share = np.zeros(self._n)
        else:
            share = amounts / total
        evicted = self._shares[self._pos] if self._filled == self._w else 0.0
        # clip away the ±1-ulp drift of the running sum so shares stay in range
        self._share_sums = np.clip(self._share_sums + share - evicted, 0.0, self._w)
        self._alloc[self._pos] = amounts
        self._totals[self._pos] = total
        self._shares[self._pos] = share
        self._pos = (self._pos + 1) % self._w
        if self._filled < self._w:
            self._filled += 1

    def slots(self) -> Iterator[tuple[np.ndarray, float]]:
        """Yield buffered (allocations, offered total) pairs, oldest first."""
        start = (self._pos - self._filled) % self._w
        for k in range(self._filled):
            i = (start + k) % self._w
            yield self._alloc[i].copy(), float(self._totals[i])


@dataclass(frozen=True)
class AllocationRecord:
    """One grant: `amount` bandwidth from `incumbent` to `operator` at `instant`."""

    instant: int
    operator: OperatorId
    incumbent: IncumbentId
    amount: float


class AllocationTrace:
    """Per-instant demands, offers, grants, and violation flags for a full run."""

    def __init__(self, demands, offered, allocated, violations=None) -> None:
        self.demands = np.asarray(demands, dtype=float)
        self.offered = np.asarray(offered, dtype=float)
        self.allocated = np.asarray(allocated, dtype=float)
        if self.demands.ndim != 2:
            raise ValueError("demands must be a (T, N) array")
        t, n = self.demands.shape
        if self.offered.shape != (t, self.offered.shape[1]) or self.offered.ndim != 2:
            raise ValueError("offered must be a (T, M) array")
        m = self.offered.shape[1]
        if self.allocated.shape != (t, n, m):
            raise ValueError(
                f"allocated must have shape {(t, n, m)}, got {self.allocated.shape}"
            )
        if violations is None:
            violations = np.zeros((t, n), dtype=bool)
        self.violations = np.asarray(violations, dtype=bool)
        if self.violations.shape != (t, n):
            raise ValueError("violations must be a (T, N) boolean array")

    @property
    def n_instants(self) -> int:
        return self.demands.shape[0]

    @property
    def n_operators(self) -> int:
        return self.demands.shape[1]

    @property
    def n_incumbents(self) -> int:
        return self.offered.shape[1]

    def operator_totals(self) -> np.ndarray:
        """(T, N) bandwidth each operator received summed across incumbents."""
        return self.allocated.sum(axis=2)

    def validate(self) -> None:
        """Raise if any stored instant breaks a conservation rule."""
        if np.any(self.demands < -TOL) or np.any(self.offered < -TOL):
            raise ValueError("negative demand or offer in trace")
        if np.any(self.allocated < -TOL):
            raise ValueError("negative allocation in trace")
        per_incumbent = self.allocated.sum(axis=1)
        if np.any(per_incumbent > self.offered + TOL):
            t, m = np.unravel_index(
                np.argmax(per_incumbent - self.offered), per_incumbent.shape
            )
            raise ValueError(
                f"instant {t}: incumbent {m} allocated more than it offered"
            )
        totals = self.operator_totals()
        if np.any(totals > self.demands + TOL):
            t, n = np.unravel_index(np.argmax(totals - self.demands), totals.shape)
            raise ValueError(f"instant {t}: operator {n} granted more than demanded")

    def records(self) -> Iterator[AllocationRecord]:
        """Yield nonzero grants in (instant, operator, incumbent) order."""
        for t, n, m in zip(*np.nonzero(self.allocated > TOL)):
            yield AllocationRecord(
                int(t), int(n), int(m), float(self.allocated[t, n, m])
            )

    def equals(self, other: "AllocationTrace") -> bool:
        """Exact, bit-level equality of all stored arrays."""
        return (
            self.demands.shape == other.demands.shape
            and self.offered.shape == other.offered.shape
            and self.demands.tobytes() == other.demands.tobytes()
            and self.offered.tobytes() == other.offered.tobytes()
            and self.allocated.tobytes() == other.allocated.tobytes()
            and self.violations.tobytes() == other.violations.tobytes()
        )

"""Single-incumbent allocation: windowed priorities and three allocators.

The priority of an operator is its mean share of the offered bandwidth over
the last `window` slots.  Operators with a low priority (little recent
spectrum) are served first by the fair allocator; two baselines, a strict
weighted split and plain round robin, share the same call shape.
"""

from __future__ import annotations

import math

import numpy as np

from .core import TOL, HistoryWindow

# Priority value marking an operator that must not be served at all.
EXCLUDED = math.inf


def compute_pi(history: HistoryWindow, operator: int) -> float:
    """Windowed mean share of one operator.

    Sums the buffered per-slot shares and divides by the window length,
    so a partially filled ring counts missing slots as zero share.
    """
    if history.slots_filled == 0:
        raise ValueError("history holds no slots yet")
    if not 0 <= operator < history.n_operators:
        raise ValueError(f"operator index {operator} out of range")
    return float(history.share_sums[operator] / history.window)


def priority_vector(history: HistoryWindow) -> np.ndarray:
    """Windowed mean share for every operator at once."""
    if history.slots_filled == 0:
        raise ValueError("history holds no slots yet")
    return history.share_sums / history.window


def resolve_tie_keys(tie_break, n: int) -> np.ndarray:
    """Accept either a Generator (keys get drawn) or an explicit key vector.

    Lower key wins among tied operators; i.i.d. uniform keys therefore pick
    uniformly at random within every tie group.
    """
    if isinstance(tie_break, np.random.Generator):
        return tie_break.random(n)
    keys = np.asarray(tie_break, dtype=float)
    if keys.shape != (n,):
        raise ValueError(f"need {n} tie-break keys, got shape {keys.shape}")
    return keys


def _check_amounts(demand: np.ndarray, offered: float) -> None:
    if not np.all(np.isfinite(demand)):
        raise ValueError("demands must be finite")
    if np.any(demand < -TOL):
        raise ValueError("demands must be non-negative")
    if not math.isfinite(offered) or offered < -TOL:
        raise ValueError("offered bandwidth must be finite and non-negative")


def fair_allocate(priority, demand, offered: float, tie_break) -> np.ndarray:
    """Greedy lowest-priority-first allocation.

    Repeatedly grants the operator with the smallest priority value
    min(demand, remaining supply), removes it from the candidate set, and
    continues until the candidates or the supply run out.  Operators whose
    priority is not finite are excluded outright and receive nothing.
    Priorities within `TOL` of the minimum count as tied; the tied operator
    with the lowest tie-break key is served first.
    """
    prio = np.asarray(priority, dtype=float)
    dem = np.asarray(demand, dtype=float)
    n = prio.shape[0]
    if dem.shape != (n,):
        raise ValueError("priority and demand lengths differ")
    if np.any(np.isnan(prio)):
        raise ValueError("priorities must not be NaN")
    _check_amounts(dem, float(offered))
    keys = resolve_tie_keys(tie_break, n)

    p = prio.tolist()
    d = dem.tolist()
    k = keys.tolist()
    active = [i for i in range(n) if math.isfinite(p[i])]
    alloc = np.zeros(n)
    remaining = float(offered)
    while active and remaining > TOL:
        low = min(p[i] for i in active)
        pick = min(
            (i for i in active if p[i] <= low + TOL), key=lambda i: (k[i], i)
        )
        grant = d[pick] if d[pick] < remaining else remaining
        if grant > 0.0:
            alloc[pick] = grant
            remaining -= grant
        active.remove(pick)
    return alloc


def strictly_fair_allocate(priority, demand, offered: float) -> np.ndarray:
    """Weighted equal split with surplus redistribution.

    Each unsaturated operator is entitled to a share proportional to
    (1 - priority); shares above demand are capped and the surplus is
    re-split over the operators still short.  Operators with priority at
    (or above) 1 carry zero weight and are left out of the pool.
    """
    prio = np.asarray(priority, dtype=float)
    dem = np.asarray(demand, dtype=float)
    n = prio.shape[0]
    if dem.shape != (n,):
        raise ValueError("priority and demand lengths differ")
    if not np.all(np.isfinite(prio)):
        raise ValueError("priorities must be finite")
    _check_amounts(dem, float(offered))

    weights = 1.0 - prio
    alloc = np.zeros(n)
    remaining = float(offered)
    if remaining > TOL and not np.any((weights > TOL) & (dem > TOL)):
        raise ValueError(
            "degenerate weights: no operator with positive demand has priority below 1"
        )

    rounds = 0
    while remaining > TOL:
        pool = np.flatnonzero((weights > TOL) & (dem - alloc > TOL))
        if pool.size == 0:
            break
        rounds += 1
        denom = weights[pool].sum()
        shares = remaining * weights[pool] / denom
        grants = np.minimum(shares, dem[pool] - alloc[pool])
        alloc[pool] += grants
        remaining -= grants.sum()
        if not np.any(dem[pool] - alloc[pool] <= TOL):
            # nobody saturated, so the whole remainder was handed out
            break
    assert rounds <= n, f"redistribution ran {rounds} rounds for {n} operators"
    return alloc


def round_robin_allocate(
    start: int, demand, offered: float
) -> tuple[np.ndarray, int]:
    """Serve operators in index order from `start`, then advance the start.

    Each operator in turn receives min(demand, remaining supply).  The
    returned next start is always start + 1 (mod N), whether or not any
    bandwidth was handed out.
    """
    dem = np.asarray(demand, dtype=float)
    n = dem.shape[0]
    if not 0 <= start < n:
        raise ValueError(f"start index {start} out of range for {n} operators")
    _check_amounts(dem, float(offered))
    alloc = np.zeros(n)
    remaining = float(offered)
    for step in range(n):
        if remaining <= TOL:
            break
        i = (start + step) % n
        grant = min(dem[i], remaining)
        if grant > 0.0:
            alloc[i] = grant
            remaining -= grant
    return alloc, (start + 1) % n


class PriorityTracker:
    """History window plus warm-start priorities for one incumbent.

    Until `window` real slots have been pushed, `priorities` returns the
    fixed warm-start vector; afterwards it returns the windowed mean share.
    """

    def __init__(self, history: HistoryWindow, initial_priority) -> None:
        initial = np.asarray(initial_priority, dtype=float)
        if initial.shape != (history.n_operators,):
            raise ValueError("one warm-start priority per operator is required")
        if np.any(initial < 0) or np.any(initial > 1):
            raise ValueError("warm-start priorities must lie in [0, 1]")
        self.history = history
        self._initial = initial.copy()
        self.real_slots = 0

    @classmethod
    def warm(cls, n_operators: int, window: int, initial_priority) -> "PriorityTracker":
        """Build a tracker whose ring is pre-filled with zero-offer slots."""
        history = HistoryWindow(n_operators, window)
        zeros = np.zeros(n_operators)
        for _ in range(window):
            history.push_slot(zeros, 0.0)
        return cls(history, initial_priority)

    def priorities(self) -> np.ndarray:
        if self.real_slots < self.history.window:
            return self._initial.copy()
        return priority_vector(self.history)

    def push(self, allocations, incumbent_total: float) -> None:
        self.history.push_slot(allocations, incumbent_total)
        self.real_slots += 1

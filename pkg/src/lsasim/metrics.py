"""Post-run statistics over allocation traces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TOL, AllocationTrace


def mean_share(trace: AllocationTrace, operator: int, incumbent: int | None = None) -> float:
    """Mean per-instant fraction of the offered bandwidth won by an operator.

    With an incumbent given, only that incumbent's grants and offers count;
    otherwise grants and offers are summed across incumbents.  Instants with
    nothing on offer contribute zero.
    """
    if not 0 <= operator < trace.n_operators:
        raise ValueError("operator index out of range")
    if incumbent is None:
        got = trace.allocated[:, operator, :].sum(axis=1)
        offered = trace.offered.sum(axis=1)
    else:
        if not 0 <= incumbent < trace.n_incumbents:
            raise ValueError("incumbent index out of range")
        got = trace.allocated[:, operator, incumbent]
        offered = trace.offered[:, incumbent]
    shares = np.zeros(trace.n_instants)
    live = offered > TOL
    shares[live] = got[live] / offered[live]
    return float(shares.mean())


def moving_average(trace: AllocationTrace, operator: int, window: int) -> np.ndarray:
    """Sliding mean of an operator's granted bandwidth, in absolute units.

    Returns T - window + 1 values, one per full window position.
    """
    if not 0 <= operator < trace.n_operators:
        raise ValueError("operator index out of range")
    if window < 1:
        raise ValueError("window must be positive")
    t = trace.n_instants
    if window > t:
        raise ValueError(f"window {window} exceeds trace length {t}")
    series = trace.allocated[:, operator, :].sum(axis=1)
    csum = np.concatenate(([0.0], np.cumsum(series)))
    return (csum[window:] - csum[:-window]) / window


def unallocated_factor(trace: AllocationTrace, incumbent: int) -> tuple[float, int]:
    """Mean wasted fraction of one incumbent's offer when demand covered supply.

    Only instants whose total demand reaches the total offered bandwidth
    qualify; the second return value is that instant count, and the factor
    is zero when no instant qualifies.
    """
    if not 0 <= incumbent < trace.n_incumbents:
        raise ValueError("incumbent index out of range")
    total_demand = trace.demands.sum(axis=1)
    total_offer = trace.offered.sum(axis=1)
    qualifying = total_demand >= total_offer - TOL
    count = int(qualifying.sum())
    if count == 0:
        return 0.0, 0
    offered = trace.offered[qualifying, incumbent]
    granted = trace.allocated[qualifying, :, incumbent].sum(axis=1)
    waste = np.zeros(count)
    live = offered > TOL
    waste[live] = 1.0 - granted[live] / offered[live]
    return float(waste.mean()), count


def dissatisfaction(trace: AllocationTrace) -> tuple[float, int]:
    """Mean unmet-demand fraction on instants where supply covered demand.

    Only instants whose total demand is at most the total offered bandwidth
    qualify; the second return value is that instant count, and the factor
    is zero when no instant qualifies.
    """
    total_demand = trace.demands.sum(axis=1)
    total_offer = trace.offered.sum(axis=1)
    qualifying = total_demand <= total_offer + TOL
    count = int(qualifying.sum())
    if count == 0:
        return 0.0, 0
    demand = total_demand[qualifying]
    granted = trace.allocated[qualifying].sum(axis=(1, 2))
    unmet = np.zeros(count)
    live = demand > TOL
    unmet[live] = 1.0 - granted[live] / demand[live]
    return float(unmet.mean()), count


def jain_index(shares) -> float:
    """Jain fairness of a non-negative share vector: 1 is perfectly even."""
    x = np.asarray(shares, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("shares must be a non-empty vector")
    if np.any(x < -TOL):
        raise ValueError("shares must be non-negative")
    if np.all(x <= TOL):
        raise ValueError("shares must not all be zero")
    return float(x.sum() ** 2 / (x.size * (x**2).sum()))


@dataclass
class MetricReport:
    """Summary statistics for one run."""

    mean_shares: np.ndarray  # (N,) against the combined offer
    mean_shares_by_incumbent: np.ndarray  # (M, N)
    moving_averages: np.ndarray  # (T - W + 1, N), absolute bandwidth
    unallocated: np.ndarray  # (M,)
    unallocated_instants: int
    dissatisfaction: float
    dissatisfaction_instants: int
    share_variance: float
    jain: float

    @property
    def no_surplus_instants(self) -> bool:
        """True when no instant qualified for the unallocated factor."""
        return self.unallocated_instants == 0

    @property
    def no_shortage_instants(self) -> bool:
        """True when no instant qualified for the dissatisfaction factor."""
        return self.dissatisfaction_instants == 0


def build_report(trace: AllocationTrace, window: int) -> MetricReport:
    n, m = trace.n_operators, trace.n_incumbents
    shares = np.array([mean_share(trace, i) for i in range(n)])
    by_inc = np.array(
        [[mean_share(trace, i, j) for i in range(n)] for j in range(m)]
    )
    moving = np.column_stack(
        [moving_average(trace, i, window) for i in range(n)]
    )
    waste = np.zeros(m)
    q = 0
    for j in range(m):
        waste[j], q = unallocated_factor(trace, j)
    unmet, l_count = dissatisfaction(trace)
    return MetricReport(
        mean_shares=shares,
        mean_shares_by_incumbent=by_inc,
        moving_averages=moving,
        unallocated=waste,
        unallocated_instants=q,
        dissatisfaction=unmet,
        dissatisfaction_instants=l_count,
        share_variance=float(np.var(shares)),
        jain=jain_index(shares) if np.any(shares > TOL) else 0.0,
    )

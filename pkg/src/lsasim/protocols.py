"""Multi-incumbent coordination built from per-coalition fair offers.

Every remaining incumbent keeps a private allocation history for its own
coalition and, each round, puts together an offer column by running the fair
allocator over its remaining members.  Three modes compose those offers:

* one-to-one sequential (`run_oos`): one grant per round, to the operator
  holding the globally best offer; the operator leaves, the incumbent stays
  until its supply is gone.
* one-to-one with clearing (`run_ooc`): as above, but the chosen incumbent
  withdraws after its first grant, wasting any remainder.
* many-to-many combinatorial (`run_mcs`): all operators accept their best
  positive offers in the same round, then operators still short sweep the
  other incumbents that offered them something, capped by what is left.

The restricted variants at the bottom exist for the property-test suite and
deliberately weaken one rule each.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .allocation import fair_allocate
from .core import TOL, Coalition


@dataclass
class InstantResult:
    """Outcome of one allocation instant: grant matrix and round count."""

    allocated: np.ndarray  # (N, M)
    rounds: int


@dataclass
class RoundState:
    """Mutable working state for one allocation instant."""

    demands: np.ndarray  # (N,) remaining demand
    supplies: np.ndarray  # (M,) remaining supply
    priorities: np.ndarray  # (M, N), frozen for the instant; inf = not served
    operators: list[int]
    incumbents: list[int]
    operator_keys: np.ndarray  # (N,) tie keys for picking among operators
    offer_keys: np.ndarray  # (N, M) tie keys for picking among incumbents
    allocated: np.ndarray  # (N, M) committed so far
    saturated: bool  # all demands and supplies positive, full membership
    rounds: int = 0

    @classmethod
    def fresh(
        cls,
        demands,
        supplies,
        priorities,
        coalitions: list[Coalition],
        operator_keys,
        offer_keys,
    ) -> "RoundState":
        dem = np.asarray(demands, dtype=float).copy()
        sup = np.asarray(supplies, dtype=float).copy()
        n, m = dem.shape[0], sup.shape[0]
        prio = np.asarray(priorities, dtype=float).copy()
        if prio.shape != (m, n):
            raise ValueError(f"priorities must have shape {(m, n)}")
        if len(coalitions) != m:
            raise ValueError("one coalition per incumbent is required")
        full = True
        for j, coalition in enumerate(coalitions):
            members = set(coalition.members)
            if any(i >= n for i in members):
                raise ValueError("coalition member index out of range")
            if members != set(range(n)):
                full = False
            for i in range(n):
                if i not in members:
                    prio[j, i] = np.inf
        op_keys = np.asarray(operator_keys, dtype=float)
        off_keys = np.asarray(offer_keys, dtype=float)
        if op_keys.shape != (n,) or off_keys.shape != (n, m):
            raise ValueError("tie key arrays have the wrong shape")
        saturated = bool(np.all(dem > TOL) and np.all(sup > TOL) and full)
        return cls(
            demands=dem,
            supplies=sup,
            priorities=prio,
            operators=list(range(n)),
            incumbents=list(range(m)),
            operator_keys=op_keys,
            offer_keys=off_keys,
            allocated=np.zeros((n, m)),
            saturated=saturated,
        )


def coalition_offers(state: RoundState, incumbent: int) -> np.ndarray:
    """Offer column of one incumbent: a fair run over its remaining members.

    Only this incumbent's priority row is read, so coalitions never see each
    other's histories.  Operators already out of the instant are excluded.
    """
    prio = state.priorities[incumbent].copy()
    out = np.ones(prio.shape[0], dtype=bool)
    out[state.operators] = False
    prio[out] = np.inf
    return fair_allocate(
        prio, state.demands, float(state.supplies[incumbent]), state.operator_keys
    )


def collect_offers(state: RoundState) -> np.ndarray:
    """(N, M) matrix of simultaneous per-coalition offers, zero where absent."""
    n, m = state.allocated.shape
    offers = np.zeros((n, m))
    for j in state.incumbents:
        offers[:, j] = coalition_offers(state, j)
    return offers


def _best_offer(state: RoundState, offers: np.ndarray, op: int, skip=()) -> tuple[int, float]:
    """Best (incumbent, amount) for one operator, or (-1, 0) if none positive.

    Amount ties within tolerance go to the incumbent with the lower offer key.
    """
    best_m, best_v = -1, 0.0
    for j in state.incumbents:
        if j in skip:
            continue
        v = offers[op, j]
        if v <= TOL:
            continue
        if v > best_v + TOL:
            best_m, best_v = j, v
        elif v >= best_v - TOL and best_m >= 0:
            if state.offer_keys[op, j] < state.offer_keys[op, best_m]:
                best_m, best_v = j, v
    return best_m, best_v


def _pick_operator(state: RoundState, best_vals: dict[int, float]) -> int:
    """Operator with the largest best offer; key tie-break within tolerance."""
    top = max(best_vals.values())
    tied = [i for i, v in best_vals.items() if v >= top - TOL]
    return min(tied, key=lambda i: (state.operator_keys[i], i))


def _commit(state: RoundState, op: int, incumbent: int, amount: float) -> None:
    state.allocated[op, incumbent] += amount
    state.supplies[incumbent] -= amount


def _prune_incumbents(state: RoundState) -> None:
    state.incumbents = [j for j in state.incumbents if state.supplies[j] > TOL]


def _finish(state: RoundState) -> InstantResult:
    return InstantResult(allocated=state.allocated, rounds=state.rounds)


def run_oos(state: RoundState) -> InstantResult:
    """Sequential one-to-one matching: one grant per round.

    Each round recomputes offers, hands the globally best offer to its
    operator, and retires that operator for the instant.  An incumbent
    leaves only once its supply is exhausted.
    """
    n0, m0 = len(state.operators), len(state.incumbents)
    while state.operators and state.incumbents:
        offers = collect_offers(state)
        best = {}
        for i in state.operators:
            j, v = _best_offer(state, offers, i)
            if j >= 0:
                best[i] = v
        if not best:
            break
        pick = _pick_operator(state, best)
        j, v = _best_offer(state, offers, pick)
        _commit(state, pick, j, v)
        state.operators.remove(pick)
        _prune_incumbents(state)
        state.rounds += 1
    if state.saturated:
        low = min(n0, m0)
        assert low <= state.rounds <= n0, (
            f"sequential matching ran {state.rounds} rounds, expected {low}..{n0}"
        )
    return _finish(state)


def run_ooc(state: RoundState) -> InstantResult:
    """One-to-one matching where the chosen incumbent withdraws immediately.

    Identical to `run_oos` except the granting incumbent leaves after its
    first grant; whatever supply it still held goes unused.
    """
    n0, m0 = len(state.operators), len(state.incumbents)
    while state.operators and state.incumbents:
        offers = collect_offers(state)
        best = {}
        for i in state.operators:
            j, v = _best_offer(state, offers, i)
            if j >= 0:
                best[i] = v
        if not best:
            break
        pick = _pick_operator(state, best)
        j, v = _best_offer(state, offers, pick)
        _commit(state, pick, j, v)
        state.operators.remove(pick)
        state.incumbents.remove(j)
        state.rounds += 1
    if state.saturated:
        assert state.rounds == min(n0, m0), (
            f"clearing matching ran {state.rounds} rounds, expected {min(n0, m0)}"
        )
    return _finish(state)


def run_mcs(state: RoundState) -> InstantResult:
    """Combinatorial matching: every operator works through its own offers.

    Each round, every operator accepts its positive offers best-first, each
    acceptance capped at its remaining demand, until it is satisfied or its
    offers run out.  Operators touch only their own entries of the round's
    offer matrix, and one incumbent's offers never sum beyond its supply, so
    the acceptances cannot collide.  Whatever supply the acceptances leave
    behind goes back on offer in the next round; operators leave once
    satisfied, incumbents once dry.
    """
    n0, m0 = len(state.operators), len(state.incumbents)
    while state.operators and state.incumbents:
        offers = collect_offers(state)
        progressed = False
        for i in state.operators:
            taken: set[int] = set()
            while state.demands[i] > TOL:
                j, v = _best_offer(state, offers, i, skip=taken)
                if j < 0:
                    break
                take = min(v, state.demands[i])
                _commit(state, i, j, take)
                state.demands[i] -= take
                taken.add(j)
                progressed = True
        if not progressed:
            break
        state.operators = [i for i in state.operators if state.demands[i] > TOL]
        _prune_incumbents(state)
        state.rounds += 1
    if state.saturated:
        assert state.rounds <= max(n0, m0), (
            f"combinatorial matching ran {state.rounds} rounds, cap {max(n0, m0)}"
        )
    return _finish(state)


def run_oos_multi_assign_variant(state: RoundState) -> InstantResult:
    """Broken sequential matching: every best offer is accepted at once.

    All operators holding a positive best offer commit simultaneously in the
    same round and then leave, so nobody benefits from the recomputed offers
    that sequential matching would have produced.  Test-suite only.
    """
    while state.operators and state.incumbents:
        offers = collect_offers(state)
        grants = []
        for i in state.operators:
            j, v = _best_offer(state, offers, i)
            if j >= 0:
                grants.append((i, j, v))
        if not grants:
            break
        for i, j, v in grants:
            _commit(state, i, j, v)
            state.operators.remove(i)
        _prune_incumbents(state)
        state.rounds += 1
    return _finish(state)


def run_mcs_single_incumbent_variant(state: RoundState) -> InstantResult:
    """Combinatorial matching without the residual sweep.

    Operators accept at most one incumbent per round (their best positive
    offer) and carry any shortfall into the next round.  Test-suite only.
    """
    while state.operators and state.incumbents:
        offers = collect_offers(state)
        progressed = False
        for i in state.operators:
            j, v = _best_offer(state, offers, i)
            if j < 0:
                continue
            _commit(state, i, j, v)
            state.demands[i] -= v
            progressed = True
        if not progressed:
            break
        state.operators = [i for i in state.operators if state.demands[i] > TOL]
        _prune_incumbents(state)
        state.rounds += 1
    return _finish(state)


def run_mcs_single_assign_variant(state: RoundState) -> InstantResult:
    """Combinatorial matching throttled to one grant per round.

    Only the operator holding the globally best offer accepts each round; it
    stays in the instant while its demand is unmet.  Test-suite only.
    """
    while state.operators and state.incumbents:
        offers = collect_offers(state)
        best = {}
        for i in state.operators:
            j, v = _best_offer(state, offers, i)
            if j >= 0:
                best[i] = v
        if not best:
            break
        pick = _pick_operator(state, best)
        j, v = _best_offer(state, offers, pick)
        _commit(state, pick, j, v)
        state.demands[pick] -= v
        if state.demands[pick] <= TOL:
            state.operators.remove(pick)
        _prune_incumbents(state)
        state.rounds += 1
    return _finish(state)

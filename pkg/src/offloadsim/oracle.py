"""Brute-force reference solver for tiny instances.

Full-tree expectimax over the exact transition distribution, memoized on
(epoch, remaining size, location).  It shares only the model primitives
with the fast planner, not its traversal or vectorization, so agreement
between the two is a meaningful check rather than a tautology.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import OracleSizeError
from .model import (
    Action,
    NetworkModel,
    ProblemSpec,
    State,
    admissible_actions,
    payment,
    slot_payment,
    transition_dist,
)

# Refuse anything bigger than this; the tree is for certification, not use.
MAX_LOCATIONS = 4
MAX_HORIZON = 6
MAX_GRID_POINTS = 6

# Two action values within this relative distance count as tied argmins.
ARGMIN_REL_TOL = 1e-12


@dataclass(frozen=True)
class OracleResult:
    optimal_value: float
    optimal_action_at_root: frozenset


def expectimax(
    model: NetworkModel,
    spec: ProblemSpec,
    s: State,
    t: int,
    *,
    flat_payment: bool = False,
) -> OracleResult:
    """Exact minimal expected cost from state ``s`` at epoch ``t``.

    Returns the optimum and every root action whose value ties it.
    """
    if model.num_locations > MAX_LOCATIONS:
        raise OracleSizeError(
            f"{model.num_locations} locations exceeds the oracle guard of {MAX_LOCATIONS}"
        )
    if spec.horizon > MAX_HORIZON:
        raise OracleSizeError(
            f"horizon {spec.horizon} exceeds the oracle guard of {MAX_HORIZON}"
        )
    if spec.grid_points > MAX_GRID_POINTS:
        raise OracleSizeError(
            f"{spec.grid_points} grid steps exceeds the oracle guard of {MAX_GRID_POINTS}"
        )

    memo = {}

    def cost_to_go(t: int, k: float, l: int) -> float:
        if t > spec.horizon:
            return float(spec.penalty(k))
        key = (t, spec.index_of(k), l)
        if key in memo:
            return memo[key]
        best = None
        for a in admissible_actions(model, l):
            best_a = _action_value(t, k, l, a)
            if best is None or best_a < best:
                best = best_a
        memo[key] = best
        return best

    def _action_value(t: int, k: float, l: int, a: Action) -> float:
        here = State(k, l)
        if a is Action.CELLULAR and flat_payment:
            pay = slot_payment(model, l, a)
        else:
            pay = payment(model, spec, here, a)
        total = pay
        for nxt, p in transition_dist(model, spec, here, a):
            total += p * cost_to_go(t + 1, nxt.k, nxt.l)
        return total

    root_values = {
        a: _action_value(t, s.k, s.l, a) for a in admissible_actions(model, s.l)
    }
    vmin = min(root_values.values())
    slack = ARGMIN_REL_TOL * max(1.0, abs(vmin))
    argmins = frozenset(a for a, val in root_values.items() if val <= vmin + slack)
    return OracleResult(optimal_value=vmin, optimal_action_at_root=argmins)

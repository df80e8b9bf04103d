"""Three-state branch environment where measuring has a computable value.

From the start state every action branches to a "plus" state with
probability p, else a "minus" state, with no reward. The two branch states
are indistinguishable without measuring; from either, the matching action
(a0 in plus, a1 in minus) pays 1, the other pays 0, and the episode ends.

The best fixed strategies are: measure the branch once and act on it
(value 1 - c), or never measure and always play the majority action
(value max(p, 1-p)); measuring wins iff c < 1 - max(p, 1-p).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import EnvSpec, TabularAcnoEnv

S0, S_PLUS, S_MINUS = 0, 1, 2


@dataclass(frozen=True)
class MeasuringValueSpec:
    branch_prob: float = 0.5
    cost: float = 0.05
    discount: float = 0.99
    step_cap: int = 1000

    def __post_init__(self):
        if not (0.0 <= self.branch_prob <= 1.0):
            raise ValueError("branch probability must lie in [0, 1]")
        if self.cost < 0:
            raise ValueError("cost must be nonnegative")


def make_measuring_value_env(spec: MeasuringValueSpec = MeasuringValueSpec()) -> TabularAcnoEnv:
    p = spec.branch_prob
    P = np.zeros((3, 2, 3))
    R = np.zeros((3, 2, 3))
    for a in range(2):
        P[S0, a, S_PLUS] = p
        P[S0, a, S_MINUS] = 1.0 - p
    # branch states self-loop; the episode ends after acting from them
    for s in (S_PLUS, S_MINUS):
        for a in range(2):
            P[s, a, s] = 1.0
    R[S_PLUS, 0, :] = 1.0
    R[S_MINUS, 1, :] = 1.0
    exit_after = np.array([False, True, True])
    env_spec = EnvSpec(
        num_states=3,
        num_actions=2,
        measurement_cost=spec.cost,
        discount=spec.discount,
        initial_state=S0,
    )
    return TabularAcnoEnv(P, R, np.zeros(3, bool), env_spec,
                          exit_after_step=exit_after, step_cap=spec.step_cap)


def strategy_values(spec: MeasuringValueSpec) -> dict[str, float]:
    """Expected episode return of each deterministic strategy.

    Strategies: measure the branch then act on it, or skip measuring and
    always play one fixed branch action.
    """
    p = spec.branch_prob
    return {
        "measure-then-match": 1.0 - spec.cost,
        "measure-then-mismatch": 0.0 - spec.cost,
        "blind-a0": p,
        "blind-a1": 1.0 - p,
    }


def measuring_threshold(spec: MeasuringValueSpec) -> float:
    """Cost above which the best blind strategy beats measuring."""
    p = spec.branch_prob
    return 1.0 - max(p, 1.0 - p)

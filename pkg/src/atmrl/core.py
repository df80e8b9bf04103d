"""Interaction contract for MDPs with a costly, noiseless measurement action.

Every step the agent submits a pair (control action, measure flag). The
environment advances its hidden state under the control action alone and
returns a reward, the measurement cost actually charged, and -- only if the
flag was set -- the post-transition state. The hidden state is never exposed
through the agent-facing surface; harness code may read ``hidden_state`` for
logging.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_STEP_CAP = 1000


@dataclass(frozen=True)
class EnvSpec:
    """Static facts an agent is allowed to know about an environment."""

    num_states: int
    num_actions: int
    measurement_cost: float
    discount: float
    initial_state: int

    def __post_init__(self):
        if self.num_states < 1 or self.num_actions < 1:
            raise ValueError("num_states and num_actions must be >= 1")
        if self.measurement_cost < 0:
            raise ValueError("measurement_cost must be nonnegative")
        if not (0.0 < self.discount <= 1.0):
            raise ValueError("discount must lie in (0, 1]")


@dataclass(frozen=True)
class StepOutcome:
    """Result of one environment step.

    ``observation`` is present iff the measure flag was set, and then equals
    the true post-transition state. ``cost`` is c * flag. ``truncated``
    marks episodes cut by the step cap rather than by the dynamics; such
    endings say nothing about the final state being terminal.
    """

    reward: float
    cost: float
    observation: int | None
    done: bool
    truncated: bool = False

    @property
    def scalarized(self) -> float:
        return self.reward - self.cost


class EpisodeFinished(RuntimeError):
    """Raised when an environment is stepped after the episode ended."""


def episode_rng(seed: int) -> np.random.Generator:
    """Counter-based generator for one episode, deterministic in ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def derive_seed(*fields: int) -> int:
    """Deterministically mix integer fields into a single 64-bit seed."""
    return int(np.random.SeedSequence(list(fields)).generate_state(1, np.uint64)[0])


class TabularAcnoEnv:
    """Environment driven by explicit kernel tensors.

    P[s, a, s'] is the transition kernel, R[s, a, s'] the reward on taking a
    in s and landing in s'. Episodes end on landing in a state flagged in
    ``terminal``, on acting from a state flagged in ``exit_after_step``
    (regardless of where the transition lands), or at ``step_cap`` steps.
    """

    def __init__(
        self,
        P: np.ndarray,
        R: np.ndarray,
        terminal: np.ndarray,
        spec: EnvSpec,
        exit_after_step: np.ndarray | None = None,
        step_cap: int = DEFAULT_STEP_CAP,
    ):
        P = np.asarray(P, dtype=float)
        R = np.asarray(R, dtype=float)
        n, a = spec.num_states, spec.num_actions
        if P.shape != (n, a, n) or R.shape != (n, a, n):
            raise ValueError("kernel tensors must have shape (S, A, S)")
        if not np.allclose(P.sum(axis=2), 1.0, atol=1e-9):
            raise ValueError("every P[s, a, :] must be a distribution")
        self.P = P
        self.R = R
        self.terminal = np.asarray(terminal, dtype=bool)
        self.exit_after_step = (
            np.zeros(n, dtype=bool) if exit_after_step is None else np.asarray(exit_after_step, dtype=bool)
        )
        self.spec = spec
        self.step_cap = step_cap
        self._cum = np.cumsum(P, axis=2)  # sampling via searchsorted
        self._state: int | None = None
        self._steps = 0
        self._done = True
        self._rng: np.random.Generator | None = None
        self._episode_reward_sum = 0.0

    # -- harness-facing surface (not part of the agent contract) --

    @property
    def hidden_state(self) -> int:
        """True current state; harness logging only."""
        if self._state is None:
            raise RuntimeError("environment has not been reset")
        return self._state

    @property
    def episode_reward_sum(self) -> float:
        """Independent tally of raw rewards this episode (cross-check channel)."""
        return self._episode_reward_sum

    # -- agent-facing contract --

    def initial_belief(self) -> np.ndarray:
        """Initial state distribution; part of the problem statement."""
        b = np.zeros(self.spec.num_states)
        b[self.spec.initial_state] = 1.0
        return b

    def reset(self, seed: int) -> int:
        """Start a new episode. Returned state is for harness logging only."""
        self._rng = episode_rng(seed)
        self._state = self.spec.initial_state
        self._steps = 0
        self._done = False
        self._episode_reward_sum = 0.0
        return self._state

    def step(self, action: int, measure: bool) -> StepOutcome:
        if self._done or self._state is None:
            raise EpisodeFinished("step() called on a finished episode")
        if not (0 <= action < self.spec.num_actions):
            raise ValueError(f"action {action} out of range")
        s = self._state
        u = self._rng.random()
        s_next = int(np.searchsorted(self._cum[s, action], u, side="right"))
        s_next = min(s_next, self.spec.num_states - 1)  # guard u == 1.0 edge
        reward = float(self.R[s, action, s_next])
        self._state = s_next
        self._steps += 1
        ended = bool(self.terminal[s_next] or self.exit_after_step[s])
        truncated = not ended and self._steps >= self.step_cap
        self._done = ended or truncated
        self._episode_reward_sum += reward
        cost = self.spec.measurement_cost if measure else 0.0
        obs = s_next if measure else None
        return StepOutcome(reward=reward, cost=cost, observation=obs, done=self._done,
                           truncated=truncated)


def random_mdp(
    num_states: int,
    num_actions: int,
    seed: int,
    measurement_cost: float = 0.0,
    discount: float = 0.95,
    step_cap: int = DEFAULT_STEP_CAP,
) -> TabularAcnoEnv:
    """Random dense MDP: Dirichlet(1) rows, rewards depending on (s, a) only.

    No terminal states; useful as a learning-dynamics testbed with an exact
    value-iteration reference.
    """
    rng = np.random.default_rng(seed)
    P = rng.dirichlet(np.ones(num_states), size=(num_states, num_actions))
    r_sa = rng.random((num_states, num_actions))
    R = np.repeat(r_sa[:, :, None], num_states, axis=2)
    spec = EnvSpec(
        num_states=num_states,
        num_actions=num_actions,
        measurement_cost=measurement_cost,
        discount=discount,
        initial_state=0,
    )
    return TabularAcnoEnv(P, R, np.zeros(num_states, bool), spec, step_cap=step_cap)

"""Synthetic mobile-health intervention simulator with costly reward surveys.

One simulated user lives through ``horizon_days`` days of ``bag_size``
decision points each. At every point the agent chooses whether to send an
activity prompt (control action) and whether to send a survey (measure).
Latent user variables follow a causal chain:

    context C   -- autoregressive, exogenous
    mediator M  -- short-term behavioral response to the prompt and context
    engagement E -- day-level drift toward a baseline, depressed by the
                    previous day's survey count (burden lands on the NEXT
                    day, not the step that incurred it)
    attitude R  -- slow-moving latent reward driven by E, M, and the
                    prompt-context interaction

The agent-facing state is a 64-way discretization of (C, E, R): four
standard-normal quantile bins per coordinate. A survey reveals the full
post-transition state (it completes the R coordinate; C and E bins are also
reported every step on a side channel for diagnostics). The learning reward
is the revealed attitude when surveyed and 0 otherwise; the true attitude is
tracked separately for harness-only logging.

This is a parameterized stand-in for trial-calibrated simulators: the shape
of the causal graph is what matters, not the coefficient values, which are
all exposed on the spec.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import EnvSpec, EpisodeFinished, StepOutcome, episode_rng

BIN_CUTS = np.array([-0.6745, 0.0, 0.6745])  # standard-normal quartile edges
# quartile medians; the representative value each bin maps back to
BIN_MIDPOINTS = np.array([-1.1503, -0.3186, 0.3186, 1.1503])
BINS_PER_AXIS = 4
NUM_STATES = BINS_PER_AXIS**3


@dataclass(frozen=True)
class MHealthSpec:
    bag_size: int = 5
    horizon_days: int = 500
    query_cost: float = 0.03
    discount: float = 0.95
    # context: AR(1) with standard-normal stationary law
    context_rho: float = 0.8
    context_noise: float = 0.6
    # mediator: response to the prompt, modulated by context
    mediator_action: float = 0.8
    mediator_context: float = 0.3
    mediator_noise: float = 0.4
    # engagement: day-level mean reversion plus survey burden
    engagement_base: float = 0.5
    engagement_recovery: float = 0.25
    query_burden: float = 0.04
    engagement_noise: float = 0.05
    # attitude: inertial latent reward
    attitude_inertia: float = 0.5
    weight_engagement: float = 0.6
    weight_prompt_context: float = 0.5
    weight_prompt_base: float = -0.1
    weight_mediator: float = 0.3
    attitude_noise: float = 0.5
    # standardization used by the 64-state binning
    context_loc: float = 0.0
    context_scale: float = 1.0
    engagement_loc: float = 0.2
    engagement_scale: float = 0.4
    attitude_loc: float = 0.15
    attitude_scale: float = 0.45

    def __post_init__(self):
        if self.bag_size < 1 or self.horizon_days < 1:
            raise ValueError("bag size and horizon must be positive")
        if self.query_cost < 0:
            raise ValueError("query cost must be nonnegative")

    @property
    def horizon_steps(self) -> int:
        return self.bag_size * self.horizon_days


@dataclass(frozen=True)
class MHealthInfo:
    """Per-step side channel: always-observable bins plus hidden diagnostics."""

    day: int
    step_in_day: int
    context_bin: int
    engagement_bin: int
    revealed_reward_bin: int | None
    latent_reward: float
    reward_missing: bool


def _bin(value: float, loc: float, scale: float) -> int:
    z = (value - loc) / scale
    return int(np.searchsorted(BIN_CUTS, z, side="right"))


def discretize_state(context: float, engagement: float, attitude: float, spec: MHealthSpec) -> int:
    """64-way state index: 16*binC + 4*binE + binR."""
    bc = _bin(context, spec.context_loc, spec.context_scale)
    be = _bin(engagement, spec.engagement_loc, spec.engagement_scale)
    br = _bin(attitude, spec.attitude_loc, spec.attitude_scale)
    return 16 * bc + 4 * be + br


def state_bins(index: int) -> tuple[int, int, int]:
    return index // 16, (index // 4) % 4, index % 4


def bin_representatives(index: int, spec: MHealthSpec) -> tuple[float, float, float]:
    """De-standardized representative (C, E, R) values for a state index."""
    bc, be, br = state_bins(index)
    return (
        spec.context_loc + spec.context_scale * BIN_MIDPOINTS[bc],
        spec.engagement_loc + spec.engagement_scale * BIN_MIDPOINTS[be],
        spec.attitude_loc + spec.attitude_scale * BIN_MIDPOINTS[br],
    )


class MHealthEnv:
    """Single-user simulator over one full intervention horizon.

    The whole horizon is one episode; day structure only affects when the
    engagement update (and its survey burden) lands.
    """

    def __init__(self, spec: MHealthSpec = MHealthSpec()):
        self.mspec = spec
        self.spec = EnvSpec(
            num_states=NUM_STATES,
            num_actions=2,
            measurement_cost=spec.query_cost,
            discount=spec.discount,
            initial_state=discretize_state(0.0, spec.engagement_base, 0.0, spec),
        )
        self.step_cap = spec.horizon_steps
        self._rng: np.random.Generator | None = None
        self._done = True
        self.last_info: MHealthInfo | None = None

    # -- agent-facing contract --

    def initial_belief(self) -> np.ndarray:
        """Uniform: the user's starting condition is not announced."""
        return np.full(NUM_STATES, 1.0 / NUM_STATES)

    def reset(self, seed: int) -> int:
        s = self.mspec
        self._rng = episode_rng(seed)
        self._context = float(self._rng.normal(0.0, 1.0))
        self._engagement = s.engagement_base
        self._attitude = s.weight_engagement * self._engagement + float(
            self._rng.normal(0.0, s.attitude_noise)
        )
        self._step = 0
        self._queries_today = 0
        self._done = False
        self._episode_reward_sum = 0.0
        self._latent_reward_sum = 0.0
        self.last_info = None
        return self.hidden_state

    def step(self, action: int, measure: bool) -> StepOutcome:
        if self._done:
            raise EpisodeFinished("step() called on a finished episode")
        if action not in (0, 1):
            raise ValueError(f"action {action} out of range")
        s = self.mspec
        rng = self._rng
        day, step_in_day = divmod(self._step, s.bag_size)

        mediator = (
            s.mediator_action * action
            + s.mediator_context * self._context
            + rng.normal(0.0, s.mediator_noise)
        )
        driver = (
            s.weight_engagement * self._engagement
            + action * (s.weight_prompt_context * self._context + s.weight_prompt_base)
            + s.weight_mediator * mediator
        )
        self._attitude = (
            s.attitude_inertia * self._attitude
            + (1.0 - s.attitude_inertia) * driver
            + rng.normal(0.0, s.attitude_noise)
        )
        self._context = s.context_rho * self._context + rng.normal(0.0, s.context_noise)
        if measure:
            self._queries_today += 1
        if step_in_day == s.bag_size - 1:  # day ends: burden from today lands on tomorrow
            self._engagement += (
                s.engagement_recovery * (s.engagement_base - self._engagement)
                - s.query_burden * self._queries_today
                + rng.normal(0.0, s.engagement_noise)
            )
            self._queries_today = 0

        latent = self._attitude
        self._latent_reward_sum += latent
        self._step += 1
        self._done = self._step >= s.horizon_steps
        reward = latent if measure else 0.0
        cost = s.query_cost if measure else 0.0
        self._episode_reward_sum += reward
        state = self.hidden_state
        self.last_info = MHealthInfo(
            day=day,
            step_in_day=step_in_day,
            context_bin=state // 16,
            engagement_bin=(state // 4) % 4,
            revealed_reward_bin=state % 4 if measure else None,
            latent_reward=latent,
            reward_missing=not measure,
        )
        return StepOutcome(
            reward=reward,
            cost=cost,
            observation=state if measure else None,
            done=self._done,
            truncated=self._done,  # horizon end, not a terminal user state
        )

    # -- harness-facing surface --

    @property
    def hidden_state(self) -> int:
        return discretize_state(self._context, self._engagement, self._attitude, self.mspec)

    @property
    def episode_reward_sum(self) -> float:
        return self._episode_reward_sum

    @property
    def latent_reward_sum(self) -> float:
        return self._latent_reward_sum

    @property
    def engagement(self) -> float:
        return self._engagement

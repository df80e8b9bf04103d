"""Act-then-measure agents with two interchangeable value learners.

The decision rule picks the control action greedily from the belief-weighted
value Q(b,a) = sum_s b(s) Q(s,a), then measures iff the measuring value

    MV(b,a) = gamma * [ E_{s'~b'} max_a' Q(s',a')  -  max_a' E_{s'~b'} Q(s',a') ] - c

is nonnegative, where b' is the predicted next belief. During the first
``exploratory_visits`` visits to a (state, action) pair the measurement is
forced to seed the transition estimates.

Learners:
  * replicated: belief-weighted TD rule, per-state step size eta_s = b(s)*eta.
  * kalman: per-(s,a) Gaussian posterior (mu, var); gain K = var/(var+tau2),
    scaled by b(s) so a measured one-hot step recovers the plain filter update.

On measured steps both learners bootstrap from the revealed next state; on
unmeasured steps they use the learned kernel's expected backup.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .belief import TransitionModel, VisitCounter, collapse, predict, validate_belief
from .core import EnvSpec, StepOutcome

SNAPSHOT_VERSION = "atm-agent-snapshot v1"

REPLICATED = "replicated"
KALMAN = "kalman"


@dataclass
class AtmConfig:
    """Agent hyperparameters. Defaults are conservative and fully exposed."""

    learner: str = REPLICATED
    discount: float = 0.95
    exploratory_visits: int = 5
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_frac: float = 0.2  # fraction of the episode budget spent decaying
    learning_rate: float = 0.1
    init_q: float = 0.0
    init_var: float = 1.0
    obs_noise: float = 0.25  # tau^2
    var_floor: float = 1e-8
    dyna_sweeps: int = 0
    prior_pseudocount: float = 1e-3
    # None: replicated targets use reward-minus-cost, kalman targets plain reward
    # (each rule as originally stated). True/False force one convention on both.
    scalarize_targets: bool | None = None
    # the filter update is defined on observed transitions; belief-weighted
    # updates on unmeasured steps homogenize the posterior means and erase
    # the dispersion signal the measure rule runs on
    kalman_unmeasured_updates: bool = False

    def __post_init__(self):
        if self.learner not in (REPLICATED, KALMAN):
            raise ValueError(f"unknown learner {self.learner!r}")
        if not (0.0 < self.discount < 1.0):
            raise ValueError("discount must lie in (0, 1)")
        if self.exploratory_visits < 0 or self.dyna_sweeps < 0:
            raise ValueError("counts must be nonnegative")
        if not (0.0 < self.learning_rate <= 1.0):
            raise ValueError("learning rate must lie in (0, 1]")
        if self.epsilon_end > self.epsilon_start:
            raise ValueError("epsilon schedule must be nonincreasing")
        if self.init_var <= 0 or self.obs_noise <= 0:
            raise ValueError("variances must be positive")

    def uses_scalarized_targets(self) -> bool:
        if self.scalarize_targets is None:
            return self.learner == REPLICATED
        return self.scalarize_targets


@dataclass(frozen=True)
class Decision:
    """One act-then-measure choice, with the quantities that drove it."""

    action: int
    measure: bool
    mv: float
    exploratory: bool


class QTable:
    """Point value estimates with a shared learning rate."""

    def __init__(self, num_states: int, num_actions: int, learning_rate: float, init_q: float = 0.0):
        self.q = np.full((num_states, num_actions), float(init_q))
        self.learning_rate = learning_rate

    def point_estimates(self) -> np.ndarray:
        return self.q


class GaussianQTable:
    """Per-(s,a) Gaussian posterior over the value: mean mu, variance var."""

    def __init__(
        self,
        num_states: int,
        num_actions: int,
        init_q: float = 0.0,
        init_var: float = 1.0,
        obs_noise: float = 0.25,
        var_floor: float = 1e-8,
        planning_rate: float = 0.1,
    ):
        self.mu = np.full((num_states, num_actions), float(init_q))
        self.var = np.full((num_states, num_actions), float(init_var))
        self.obs_noise = float(obs_noise)
        self.var_floor = float(var_floor)
        # step size for simulated (planning) mean revisions, which bypass
        # the gain: replayed bootstrap targets carry no fresh evidence
        self.planning_rate = float(planning_rate)

    def point_estimates(self) -> np.ndarray:
        return self.mu

    def gain(self, b_prev: np.ndarray, action: int) -> np.ndarray:
        """Belief-scaled Kalman gain for one action column; in [0, 1)."""
        col = self.var[:, action]
        return b_prev * col / (col + self.obs_noise)


def q_belief(belief: np.ndarray, action: int, values) -> float:
    """Belief-weighted value of a control action."""
    return float(belief @ values.point_estimates()[:, action])


def select_control(belief: np.ndarray, values, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy over Q(b, .); ties break to the lowest index."""
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(values.point_estimates().shape[1]))
    scores = belief @ values.point_estimates()
    return int(np.argmax(scores))


def measuring_value(
    belief: np.ndarray,
    action: int,
    values,
    model: TransitionModel,
    cost: float,
    gamma: float,
    validate: bool = True,
) -> float:
    """Value of resolving the next state, minus the measurement cost.

    Always >= -cost: knowing the state can never hurt (max of means never
    exceeds mean of maxes). Immediate-reward terms are shared by both
    branches and cancel.
    """
    b_next = predict(belief, action, model, validate=validate)
    q = values.point_estimates()
    value_knowing = float(b_next @ q.max(axis=1))
    value_guessing = float((b_next @ q).max())
    return gamma * (value_knowing - value_guessing) - cost


def decide(
    belief: np.ndarray,
    values,
    model: TransitionModel,
    visits: VisitCounter,
    cfg: AtmConfig,
    cost: float,
    epsilon: float,
    rng: np.random.Generator,
) -> Decision:
    """Pick the control action, then the measurement flag.

    The forced-exploration gate pre-empts the measuring-value rule, so the
    value is not computed on gated steps (the decision record carries nan).
    """
    action = select_control(belief, values, epsilon, rng)
    s_star = int(np.argmax(belief))
    exploratory = visits.mass(s_star, action) < cfg.exploratory_visits
    if exploratory:
        return Decision(action=action, measure=True, mv=float("nan"), exploratory=True)
    mv = measuring_value(belief, action, values, model, cost, cfg.discount, validate=False)
    return Decision(action=action, measure=mv >= 0.0, mv=mv, exploratory=False)


def _bootstrap(values, model, action, s_obs, terminal):
    """Next-step value term of the TD target.

    Terminal steps contribute nothing. With a revealed next state the target
    bootstraps from it (scalar); otherwise it takes the learned kernel's
    expectation per origin state (vector over states).
    """
    if terminal:
        return 0.0
    best = values.point_estimates().max(axis=1)
    if s_obs is not None:
        return float(best[s_obs])
    return model.kernel(action) @ best


def replicated_update(
    values: QTable,
    b_prev: np.ndarray,
    action: int,
    reward: float,
    model: TransitionModel,
    gamma: float,
    terminal: bool = False,
    validate: bool = True,
) -> None:
    """Belief-weighted TD update; rows with zero belief mass are untouched.

    The bootstrap term is always the learned kernel's expected best value,
    so with an exact model the update is a noise-free contraction.
    """
    if validate:
        b_prev = validate_belief(b_prev)
    eta_s = b_prev * values.learning_rate
    target = reward + gamma * _bootstrap(values, model, action, None, terminal)
    col = values.q[:, action]
    values.q[:, action] = (1.0 - eta_s) * col + eta_s * target


def kalman_update(
    values: GaussianQTable,
    b_prev: np.ndarray,
    action: int,
    reward: float,
    model: TransitionModel,
    gamma: float,
    s_obs: int | None = None,
    terminal: bool = False,
    validate: bool = True,
) -> None:
    """Gaussian posterior update with belief-scaled gain.

    With a one-hot belief and an observed next state this is the plain
    filter recursion: nu = r + gamma*max mu(s',.), K = var/(var+tau2),
    mu += K (nu - mu), var *= (1 - K).
    """
    if validate:
        b_prev = validate_belief(b_prev)
    nu = reward + gamma * _bootstrap(values, model, action, s_obs, terminal)
    gain = values.gain(b_prev, action)
    values.mu[:, action] += gain * (nu - values.mu[:, action])
    values.var[:, action] = np.maximum((1.0 - gain) * values.var[:, action], values.var_floor)


class RewardModel:
    """Belief-weighted running mean of environment rewards per (s, a).

    Backs simulated-experience targets; measurement costs are excluded since
    simulated steps never measure. Callers should only feed steps whose
    origin state is (near) certain: credit assigned under a spread belief is
    replayed indefinitely by planning sweeps and diverges the value tables.
    """

    CONFIDENT = 0.999  # belief mass treated as a known origin state

    def __init__(self, num_states: int, num_actions: int):
        self.total = np.zeros((num_states, num_actions))
        self.weight = np.zeros((num_states, num_actions))

    def add(self, b_prev: np.ndarray, action: int, reward: float) -> None:
        self.total[:, action] += b_prev * reward
        self.weight[:, action] += b_prev

    def mean(self, s: int, a: int) -> float:
        w = self.weight[s, a]
        return float(self.total[s, a] / w) if w > 0 else 0.0

    @classmethod
    def preloaded(cls, rewards: np.ndarray, weight: float = 1.0) -> "RewardModel":
        rewards = np.asarray(rewards, dtype=float)
        rm = cls(*rewards.shape)
        rm.total = rewards * weight
        rm.weight = np.full_like(rewards, weight)
        return rm


def dyna_sweep(
    values,
    model: TransitionModel,
    reward_model: RewardModel,
    n_sweeps: int,
    gamma: float,
    rng: np.random.Generator,
) -> None:
    """Simulated one-step backups over (s, a) pairs with recorded mass.

    Each sweep samples a visited pair uniformly, forms the target from the
    learned kernel and reward means, and applies the learner's update at
    full weight (one-hot belief at the sampled state). For the Gaussian
    learner only the mean moves: a replayed bootstrap target is not new
    evidence, so it must not concentrate the posterior (letting it do so
    freezes the gain long before the values settle).
    """
    if n_sweeps <= 0:
        return
    row_mass = model.counts.sum(axis=2)
    pairs = np.argwhere(row_mass > 0.0)
    if len(pairs) == 0:
        return
    picks = rng.integers(len(pairs), size=n_sweeps)
    for idx in picks:
        s, a = int(pairs[idx, 0]), int(pairs[idx, 1])
        r_hat = reward_model.mean(s, a)
        psi = float(model.probs(s, a) @ values.point_estimates().max(axis=1))
        target = r_hat + gamma * psi
        if isinstance(values, QTable):
            eta = values.learning_rate
            values.q[s, a] = (1.0 - eta) * values.q[s, a] + eta * target
        else:
            values.mu[s, a] += values.planning_rate * (target - values.mu[s, a])


class AtmAgent:
    """Full act-then-measure agent: belief, models, learner, decision rule."""

    def __init__(self, spec: EnvSpec, cfg: AtmConfig, rng: np.random.Generator):
        self.spec = spec
        self.cfg = cfg
        self.rng = rng
        n, a = spec.num_states, spec.num_actions
        self.model = TransitionModel(n, a, cfg.prior_pseudocount)
        self.visits = VisitCounter(n, a)
        self.reward_model = RewardModel(n, a)
        if cfg.learner == REPLICATED:
            self.values: QTable | GaussianQTable = QTable(n, a, cfg.learning_rate, cfg.init_q)
        else:
            self.values = GaussianQTable(n, a, cfg.init_q, cfg.init_var, cfg.obs_noise,
                                         cfg.var_floor, planning_rate=cfg.learning_rate)
        self.belief: np.ndarray | None = None

    def begin_episode(self, initial_belief: np.ndarray) -> None:
        self.belief = validate_belief(initial_belief)

    def act(self, epsilon: float) -> Decision:
        if self.belief is None:
            raise RuntimeError("begin_episode() before act()")
        return decide(
            self.belief, self.values, self.model, self.visits, self.cfg,
            self.spec.measurement_cost, epsilon, self.rng,
        )

    def force_measure(self, decision: Decision) -> Decision:
        """Override the measurement flag (warm-up phases)."""
        return replace(decision, measure=True, exploratory=True)

    def observe(self, decision: Decision, outcome: StepOutcome) -> None:
        """Fold one step's outcome into every learned structure."""
        b_prev = self.belief
        a = decision.action
        raw = outcome.reward
        self.visits.add(b_prev, a)
        if b_prev.max() >= RewardModel.CONFIDENT:
            self.reward_model.add(b_prev, a, raw)
        if decision.measure:
            s_obs = outcome.observation
            self.model.record(b_prev, a, s_obs)
            next_belief = collapse(s_obs, self.spec.num_states)
        else:
            s_obs = None
            next_belief = predict(b_prev, a, self.model, validate=False)
        reward = outcome.scalarized if self.cfg.uses_scalarized_targets() else raw
        ended = outcome.done and not outcome.truncated
        if isinstance(self.values, QTable):
            replicated_update(self.values, b_prev, a, reward, self.model, self.cfg.discount,
                              terminal=ended, validate=False)
        elif decision.measure or self.cfg.kalman_unmeasured_updates:
            kalman_update(self.values, b_prev, a, reward, self.model, self.cfg.discount,
                          s_obs=s_obs, terminal=ended, validate=False)
        self.belief = next_belief
        if self.cfg.dyna_sweeps:
            dyna_sweep(self.values, self.model, self.reward_model,
                       self.cfg.dyna_sweeps, self.cfg.discount, self.rng)

    # -- snapshot format: versioned line-oriented text --

    def save_text(self) -> str:
        lines = [SNAPSHOT_VERSION]
        lines.append(f"learner {self.cfg.learner}")
        lines.append(f"shape {self.spec.num_states} {self.spec.num_actions}")
        for name, arr in self._arrays().items():
            lines.append(f"array {name}")
            for row in arr:
                lines.append(" ".join(repr(float(x)) for x in row))
        return "\n".join(lines) + "\n"

    def load_text(self, text: str) -> None:
        lines = text.splitlines()
        if lines[0] != SNAPSHOT_VERSION:
            raise ValueError("unrecognized snapshot version")
        if lines[1].split()[1] != self.cfg.learner:
            raise ValueError("snapshot learner does not match agent config")
        n, a = (int(x) for x in lines[2].split()[1:])
        if (n, a) != (self.spec.num_states, self.spec.num_actions):
            raise ValueError("snapshot shape does not match environment")
        arrays = self._arrays()
        i = 3
        while i < len(lines):
            if not lines[i].startswith("array "):
                raise ValueError(f"malformed snapshot at line {i + 1}")
            name = lines[i].split()[1]
            target = arrays[name]
            rows = [lines[i + 1 + r].split() for r in range(target.shape[0])]
            target[:] = np.array(rows, dtype=float)
            i += 1 + target.shape[0]
        self.model.invalidate()

    def _arrays(self) -> dict[str, np.ndarray]:
        out = {
            "transition_counts": self.model.counts.reshape(self.spec.num_states * self.spec.num_actions, -1),
            "visits": self.visits.visits,
            "reward_total": self.reward_model.total,
            "reward_weight": self.reward_model.weight,
        }
        if isinstance(self.values, QTable):
            out["q"] = self.values.q
        else:
            out["mu"] = self.values.mu
            out["var"] = self.values.var
        return out

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.save_text())

    def load(self, path) -> None:
        with open(path) as fh:
            self.load_text(fh.read())

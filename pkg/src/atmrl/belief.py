"""Belief state over hidden environment states and the learned transition model.

The belief is a plain probability vector. Between measurements it evolves by
the predictive rule b'(s') = sum_s b(s) P_hat(s'|s,a) under the agent's
learned kernel; a measurement collapses it to a one-hot vector. Transition
estimates are Dirichlet-style pseudo-counts, updated only on measured steps.
"""

from __future__ import annotations

import io

import numpy as np

SIMPLEX_TOL = 1e-6  # renormalize below this drift, raise above it


class BeliefError(ValueError):
    pass


def validate_belief(b: np.ndarray) -> np.ndarray:
    """Check simplex membership; renormalize float drift, reject logic bugs."""
    b = np.asarray(b, dtype=float)
    if b.ndim != 1:
        raise BeliefError("belief must be a 1-d vector")
    if np.any(b < -1e-12):
        raise BeliefError("belief has negative entries")
    total = b.sum()
    if abs(total - 1.0) > SIMPLEX_TOL:
        raise BeliefError(f"belief mass {total} is not 1 within {SIMPLEX_TOL}")
    return np.clip(b, 0.0, None) / total


def collapse(s_obs: int, n: int) -> np.ndarray:
    """One-hot belief at an observed state."""
    if not (0 <= s_obs < n):
        raise BeliefError(f"observed state {s_obs} out of range for {n} states")
    b = np.zeros(n)
    b[s_obs] = 1.0
    return b


class TransitionModel:
    """Pseudo-count transition estimates alpha[s, a, s'].

    Rows normalize to P_hat(s'|s,a) = (alpha + prior) / sum(alpha + prior);
    a row with zero total mass falls back to uniform (the agent starts with
    no knowledge of the dynamics, so maximum entropy is the only default).
    """

    def __init__(self, num_states: int, num_actions: int, prior_pseudocount: float = 1e-3):
        if prior_pseudocount < 0:
            raise ValueError("prior pseudocount must be nonnegative")
        self.num_states = num_states
        self.num_actions = num_actions
        self.prior = float(prior_pseudocount)
        self.counts = np.zeros((num_states, num_actions, num_states))
        self._kernel_cache: dict[int, np.ndarray] = {}

    def record(self, b_prev: np.ndarray, action: int, s_obs: int) -> None:
        """Credit the observed arrival state, fractionally across b_prev.

        With a one-hot b_prev this is the plain indicator update
        alpha[s, a, s_obs] += 1; total added mass is always exactly 1.
        """
        b_prev = validate_belief(b_prev)
        if not (0 <= s_obs < self.num_states):
            raise BeliefError(f"observed state {s_obs} out of range")
        self.counts[:, action, s_obs] += b_prev
        self._kernel_cache.pop(action, None)

    def invalidate(self) -> None:
        """Drop cached kernels; call after mutating ``counts`` directly."""
        self._kernel_cache.clear()

    def probs(self, s: int, a: int) -> np.ndarray:
        """P_hat(.|s,a) as a valid distribution."""
        row = self.counts[s, a] + self.prior
        total = row.sum()
        if total <= 0.0:
            return np.full(self.num_states, 1.0 / self.num_states)
        return row / total

    def kernel(self, a: int) -> np.ndarray:
        """Full P_hat(s'|s,a) matrix for one action (cached between updates)."""
        cached = self._kernel_cache.get(a)
        if cached is not None:
            return cached
        rows = self.counts[:, a, :] + self.prior
        totals = rows.sum(axis=1, keepdims=True)
        out = np.empty_like(rows)
        zero = (totals <= 0.0).ravel()
        np.divide(rows, totals, out=out, where=totals > 0.0)
        if zero.any():
            out[zero] = 1.0 / self.num_states
        self._kernel_cache[a] = out
        return out

    @classmethod
    def from_kernel(cls, P: np.ndarray, strength: float = 1e12) -> "TransitionModel":
        """Model preloaded with a known kernel (counts = strength * P)."""
        P = np.asarray(P, dtype=float)
        n, a, _ = P.shape
        model = cls(n, a, prior_pseudocount=0.0)
        model.counts = P * strength
        model.invalidate()
        return model

    def to_text(self) -> str:
        """Line-oriented dump, one row per (s, a): ``s a c0 c1 ... cN``."""
        buf = io.StringIO()
        buf.write(f"# transition-counts v1 states={self.num_states} actions={self.num_actions} prior={self.prior!r}\n")
        for s in range(self.num_states):
            for a in range(self.num_actions):
                cells = " ".join(repr(float(c)) for c in self.counts[s, a])
                buf.write(f"{s} {a} {cells}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "TransitionModel":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        header = lines[0]
        if not header.startswith("# transition-counts v1"):
            raise ValueError("unrecognized transition model dump")
        fields = dict(part.split("=") for part in header.split()[3:])
        model = cls(int(fields["states"]), int(fields["actions"]), float(fields["prior"]))
        for ln in lines[1:]:
            parts = ln.split()
            s, a = int(parts[0]), int(parts[1])
            model.counts[s, a] = [float(x) for x in parts[2:]]
        model.invalidate()
        return model


def predict(b: np.ndarray, action: int, model: TransitionModel, validate: bool = True) -> np.ndarray:
    """Predictive belief update under the learned kernel.

    ``validate`` may be disabled on hot paths where the caller maintains the
    simplex invariant; the output stays normalized either way.
    """
    if validate:
        b = validate_belief(b)
    out = b @ model.kernel(action)
    if validate:
        return validate_belief(out)
    return out


class VisitCounter:
    """Belief-weighted visit mass per (state, action); monotone nondecreasing."""

    def __init__(self, num_states: int, num_actions: int):
        self.visits = np.zeros((num_states, num_actions))

    def add(self, b_prev: np.ndarray, action: int) -> None:
        self.visits[:, action] += b_prev

    def mass(self, s: int, a: int) -> float:
        return float(self.visits[s, a])


def belief_to_text(b: np.ndarray) -> str:
    return "# belief v1 " + " ".join(repr(float(x)) for x in np.asarray(b, dtype=float))


def belief_from_text(text: str) -> np.ndarray:
    parts = text.strip().split()
    if parts[:3] != ["#", "belief", "v1"]:
        raise ValueError("unrecognized belief dump")
    return np.array([float(x) for x in parts[3:]])

import numpy as np
import pytest

from atmrl.core import EnvSpec, EpisodeFinished, StepOutcome, TabularAcnoEnv, random_mdp


def _chain_env(cost=0.1, step_cap=1000):
    # two states, one action, deterministic swap, reward on entering state 1
    P = np.zeros((2, 1, 2))
    P[0, 0, 1] = 1.0
    P[1, 0, 0] = 1.0
    R = np.zeros((2, 1, 2))
    R[0, 0, 1] = 1.0
    spec = EnvSpec(2, 1, cost, 0.9, 0)
    return TabularAcnoEnv(P, R, np.zeros(2, bool), spec, step_cap=step_cap)


def test_env_spec_validation():
    with pytest.raises(ValueError):
        EnvSpec(0, 1, 0.0, 0.9, 0)
    with pytest.raises(ValueError):
        EnvSpec(2, 1, -0.1, 0.9, 0)
    with pytest.raises(ValueError):
        EnvSpec(2, 1, 0.0, 1.5, 0)


def test_scalarized_reward_is_reward_minus_cost():
    out = StepOutcome(reward=1.0, cost=0.25, observation=3, done=False)
    assert out.scalarized == 0.75


def test_step_requires_reset_and_rejects_finished_episodes():
    env = _chain_env(step_cap=3)
    with pytest.raises(EpisodeFinished):
        env.step(0, False)
    env.reset(0)
    for _ in range(3):
        env.step(0, False)
    with pytest.raises(EpisodeFinished):
        env.step(0, False)


def test_cost_charged_only_when_measuring():
    env = _chain_env(cost=0.1)
    env.reset(0)
    out = env.step(0, True)
    assert out.cost == 0.1 and out.observation is not None
    out = env.step(0, False)
    assert out.cost == 0.0 and out.observation is None


def test_observation_matches_hidden_state():
    env = random_mdp(6, 2, seed=5)
    env.reset(11)
    for _ in range(50):
        out = env.step(0, True)
        assert out.observation == env.hidden_state


def test_same_seed_same_trajectory():
    env = random_mdp(5, 3, seed=9, measurement_cost=0.02)
    actions = np.random.default_rng(1).integers(3, size=40)
    traces = []
    for _ in range(2):
        env.reset(123)
        traces.append([env.step(int(a), True) for a in actions])
    assert traces[0] == traces[1]


def test_step_cap_marks_truncated():
    env = _chain_env(step_cap=4)
    env.reset(0)
    outs = [env.step(0, False) for _ in range(4)]
    assert [o.done for o in outs] == [False, False, False, True]
    assert outs[-1].truncated


def test_terminal_state_ends_episode_without_truncation():
    P = np.zeros((2, 1, 2))
    P[0, 0, 1] = 1.0
    P[1, 0, 1] = 1.0
    R = np.zeros((2, 1, 2))
    R[0, 0, 1] = 1.0
    spec = EnvSpec(2, 1, 0.0, 0.9, 0)
    env = TabularAcnoEnv(P, R, np.array([False, True]), spec)
    env.reset(0)
    out = env.step(0, False)
    assert out.done and not out.truncated and out.reward == 1.0


def test_exit_after_step_ends_episode_from_origin():
    P = np.zeros((2, 1, 2))
    P[:, 0, 0] = 1.0
    R = np.zeros((2, 1, 2))
    spec = EnvSpec(2, 1, 0.0, 0.9, 0)
    env = TabularAcnoEnv(P, R, np.zeros(2, bool), spec,
                         exit_after_step=np.array([True, False]))
    env.reset(0)
    assert env.step(0, False).done


def test_episode_reward_sum_cross_check_channel():
    env = _chain_env()
    env.reset(3)
    total = sum(env.step(0, bool(i % 2)).reward for i in range(10))
    assert env.episode_reward_sum == pytest.approx(total)


def test_initial_belief_is_one_hot_at_start():
    env = _chain_env()
    b = env.initial_belief()
    assert b[0] == 1.0 and b.sum() == 1.0


def test_kernel_rows_must_be_distributions():
    P = np.zeros((2, 1, 2))
    P[0, 0, 1] = 0.5
    P[1, 0, 0] = 1.0
    with pytest.raises(ValueError):
        TabularAcnoEnv(P, np.zeros((2, 1, 2)), np.zeros(2, bool), EnvSpec(2, 1, 0, 0.9, 0))


def test_random_mdp_rewards_depend_on_state_action_only():
    env = random_mdp(4, 2, seed=0)
    assert np.allclose(env.R, env.R[:, :, :1])
    assert np.allclose(env.P.sum(axis=2), 1.0)

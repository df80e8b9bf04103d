import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atmrl.belief import (
    BeliefError,
    TransitionModel,
    belief_from_text,
    belief_to_text,
    collapse,
    predict,
    validate_belief,
)
from atmrl.envs.measuring_value import MeasuringValueSpec, make_measuring_value_env

from .oracles import predict_by_loops


def test_predict_identity_kernel_keeps_belief():
    model = TransitionModel.from_kernel(np.eye(3)[:, None, :])
    b = np.full(3, 1 / 3)
    assert np.allclose(predict(b, 0, model), b)


def test_predict_one_hot_branch():
    P = np.zeros((3, 1, 3))
    P[0, 0, 1] = 0.5
    P[0, 0, 2] = 0.5
    P[1, 0, 1] = 1.0
    P[2, 0, 2] = 1.0
    model = TransitionModel.from_kernel(P)
    out = predict(collapse(0, 3), 0, model)
    assert np.allclose(out, [0.0, 0.5, 0.5])


def test_predict_matches_double_loop_oracle():
    rng = np.random.default_rng(4)
    P = rng.dirichlet(np.ones(3), size=(3, 1))[:, :, :]
    model = TransitionModel.from_kernel(P)
    b = rng.dirichlet(np.ones(3))
    expected = predict_by_loops(b, P[:, 0, :])
    assert np.allclose(predict(b, 0, model), expected, atol=1e-12)


def test_collapse_examples_and_bounds():
    assert np.array_equal(collapse(2, 4), [0, 0, 1, 0])
    assert np.array_equal(collapse(0, 1), [1.0])
    with pytest.raises(BeliefError):
        collapse(4, 4)
    model = TransitionModel.from_kernel(np.eye(4)[:, None, :])
    assert np.allclose(predict(collapse(2, 4), 0, model), collapse(2, 4))


def test_validate_belief_renormalizes_drift_but_rejects_bugs():
    b = np.array([0.5, 0.5 + 3e-7])
    out = validate_belief(b)
    assert out.sum() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(BeliefError):
        validate_belief(np.array([0.7, 0.5]))
    with pytest.raises(BeliefError):
        validate_belief(np.array([-0.2, 1.2]))


def test_record_one_hot_is_indicator_update():
    model = TransitionModel(3, 2, prior_pseudocount=0.0)
    model.record(collapse(0, 3), 1, 2)
    assert model.counts[0, 1, 2] == 1.0
    assert model.counts.sum() == 1.0


def test_record_fractional_mass_conserved():
    model = TransitionModel(2, 1, prior_pseudocount=0.0)
    model.record(np.array([0.5, 0.5]), 0, 1)
    assert model.counts[0, 0, 1] == 0.5
    assert model.counts[1, 0, 1] == 0.5
    before = model.counts.sum()
    model.record(np.array([0.3, 0.7]), 0, 0)
    assert model.counts.sum() == pytest.approx(before + 1.0)


def test_record_rejects_bad_observation():
    model = TransitionModel(2, 1)
    with pytest.raises(BeliefError):
        model.record(collapse(0, 2), 0, 5)


def test_branch_probability_concentrates_after_measured_steps():
    env = make_measuring_value_env(MeasuringValueSpec(branch_prob=0.5))
    model = TransitionModel(3, 2, prior_pseudocount=0.0)
    for ep in range(1000):
        env.reset(ep)
        b = env.initial_belief()
        out = env.step(0, True)
        model.record(b, 0, out.observation)
    p_hat = model.probs(0, 0)[1]
    assert 0.45 <= p_hat <= 0.55


def test_transition_probs_examples():
    model = TransitionModel(3, 1, prior_pseudocount=0.0)
    model.counts[0, 0] = [2.0, 2.0, 0.0]
    model.invalidate()
    assert np.allclose(model.probs(0, 0), [0.5, 0.5, 0.0])
    empty = TransitionModel(4, 1, prior_pseudocount=0.0)
    assert np.allclose(empty.probs(0, 0), 0.25)


def test_transition_probs_prior_arithmetic():
    model = TransitionModel(2, 1, prior_pseudocount=1.0)
    model.counts[0, 0] = [1.0, 3.0]
    model.invalidate()
    assert np.allclose(model.probs(0, 0), [2 / 6, 4 / 6])


def test_kernel_cache_invalidation_on_record():
    model = TransitionModel(2, 1, prior_pseudocount=0.0)
    first = model.kernel(0).copy()
    model.record(collapse(0, 2), 0, 1)
    assert not np.allclose(model.kernel(0), first)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10**6))
def test_predict_preserves_simplex(n, seed):
    rng = np.random.default_rng(seed)
    P = rng.dirichlet(np.ones(n), size=(n, 1))
    model = TransitionModel.from_kernel(P)
    b = rng.dirichlet(np.ones(n))
    out = predict(b, 0, model)
    assert abs(out.sum() - 1.0) < 1e-9
    assert (out >= 0).all()


def test_iterated_predict_matches_hidden_state_marginal():
    # true kernel substituted for the model; compare two predict steps with
    # the Monte-Carlo distribution of the hidden state after two env steps
    spec = MeasuringValueSpec(branch_prob=0.35)
    env = make_measuring_value_env(spec)
    model = TransitionModel.from_kernel(env.P)
    b = predict(predict(env.initial_belief(), 0, model), 0, model)
    counts = np.zeros(3)
    n = 100_000
    for i in range(n):
        env.reset(i)
        env.step(0, False)
        env.step(0, False)
        counts[env.hidden_state] += 1
    tv = 0.5 * np.abs(counts / n - b).sum()
    assert tv < 0.02


def test_model_text_round_trip():
    model = TransitionModel(2, 2, prior_pseudocount=0.5)
    model.record(np.array([0.25, 0.75]), 1, 0)
    clone = TransitionModel.from_text(model.to_text())
    assert clone.prior == model.prior
    assert np.allclose(clone.counts, model.counts)
    assert np.allclose(clone.kernel(1), model.kernel(1))


def test_belief_text_round_trip():
    b = np.array([0.125, 0.875])
    assert np.allclose(belief_from_text(belief_to_text(b)), b)

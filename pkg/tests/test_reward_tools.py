import math

import numpy as np
import pytest

from models.errors import InconsistentUpdateError
from tests.generate_test_data import identity_useful_model, random_instance
from tools.belief_tools import Belief, F, bayes_update, marginal_useful
from tools.reward_tools import (
    InfoEstimator,
    accumulate_total_mi,
    belief_reward,
    entropy_drop_reward,
    info_reward,
    per_step_mi,
    realized_info_reward,
)

KL_EXAMPLE = 0.9 * math.log(1.8) + 0.1 * math.log(0.2)


def _with_useful_marginal(u0: float) -> Belief:
    # 两个秘密各占一半，U 边缘为 [u0, 1-u0]
    return Belief(np.array([[u0 / 2, (1 - u0) / 2], [u0 / 2, (1 - u0) / 2]]))


def _expected_step_reward(belief, pi, model, reward_fn) -> float:
    """对 (a,z) 精确求期望"""
    terms = []
    for a in range(model.spec.n_actions):
        evidence = np.einsum("suz,su->z", model.q[a], belief.p)
        for z in range(model.spec.n_obs):
            if pi[a] > 0 and evidence[z] > 0:
                terms.append(pi[a] * evidence[z] * reward_fn(belief, bayes_update(belief, a, z, model)))
    return math.fsum(terms)


def test_belief_reward():
    assert belief_reward(F, 0.8) == 0.0
    assert belief_reward(Belief.uniform(2, 2), 0.8) == 0.0
    crossing = Belief(np.array([[0.7, 0.2], [0.05, 0.05]]))
    assert belief_reward(crossing, 0.8) == pytest.approx(0.75)
    assert belief_reward(Belief(np.array([[0.45, 0.45], [0.05, 0.05]])), 0.8) == pytest.approx(0.5)


def test_per_step_mi_bounds():
    rng = np.random.default_rng(3)
    for _ in range(300):
        m = int(rng.integers(1, 4))
        model = random_instance(rng, int(rng.integers(1, 4)), m, int(rng.integers(1, 4)), int(rng.integers(2, 5)))
        b = Belief(rng.dirichlet(np.ones(model.prior.size)).reshape(model.prior.shape))
        pi = rng.dirichlet(np.ones(model.spec.n_actions))
        value = per_step_mi(b, pi, model)
        assert 0.0 <= value <= math.log(m) + 1e-12
        beta_u = marginal_useful(b)
        entropy_u = -np.sum(beta_u[beta_u > 0] * np.log(beta_u[beta_u > 0]))
        assert value <= entropy_u + 1e-12


def test_per_step_mi_of_uninformative_channel(uninformative):
    assert per_step_mi(Belief.uniform(2, 2), np.array([0.5, 0.5]), uninformative) == pytest.approx(0.0, abs=1e-15)


def test_per_step_mi_of_reveal_channel(reveal):
    b = Belief.from_prior(reveal)
    assert per_step_mi(b, np.array([0.0, 1.0]), reveal) == pytest.approx(math.log(2))
    # 秘密与有用变量在均匀先验下独立，暴露秘密不泄露 U
    assert per_step_mi(b, np.array([1.0, 0.0]), reveal) == pytest.approx(0.0, abs=1e-15)
    assert per_step_mi(b, np.array([0.5, 0.5]), reveal) == pytest.approx(0.5 * math.log(2))


def test_identity_channel_reveals_log_m():
    model = identity_useful_model(n=2, m=3)
    b = Belief.uniform(2, 3)
    for pi in ([1.0, 0.0], [0.3, 0.7]):
        assert per_step_mi(b, np.array(pi), model) == pytest.approx(math.log(3))
    posterior = bayes_update(b, 1, 2, model)
    assert realized_info_reward(b, posterior) == pytest.approx(math.log(3))


def test_realized_reward_examples():
    prev = _with_useful_marginal(0.5)
    assert realized_info_reward(prev, prev) == 0.0
    assert realized_info_reward(prev, _with_useful_marginal(0.9)) == pytest.approx(KL_EXAMPLE)
    assert KL_EXAMPLE == pytest.approx(0.368, abs=1e-3)


def test_realized_reward_support_violation():
    prev = Belief(np.array([[0.5, 0.0], [0.5, 0.0]]))
    with pytest.raises(InconsistentUpdateError):
        realized_info_reward(prev, Belief.uniform(2, 2))


def test_realized_reward_is_unbiased_for_step_mi():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n_actions = int(rng.integers(1, 4))
        n_obs = int(rng.integers(2, 12 // n_actions + 1))
        model = random_instance(rng, 2, int(rng.integers(2, 4)), n_actions, n_obs)
        b = Belief(rng.dirichlet(np.ones(model.prior.size)).reshape(model.prior.shape))
        pi = rng.dirichlet(np.ones(n_actions))
        expected = _expected_step_reward(b, pi, model, realized_info_reward)
        assert expected == pytest.approx(per_step_mi(b, pi, model), abs=1e-12)


def test_entropy_drop_is_unbiased_but_may_be_negative():
    rng = np.random.default_rng(5)
    model = random_instance(rng, 2, 2, 2, 3)
    b = Belief.from_prior(model)
    pi = np.array([0.4, 0.6])
    expected = _expected_step_reward(b, pi, model, entropy_drop_reward)
    assert expected == pytest.approx(per_step_mi(b, pi, model), abs=1e-12)

    assert entropy_drop_reward(_with_useful_marginal(0.9), _with_useful_marginal(0.5)) < 0


def test_info_reward_cases():
    prev = _with_useful_marginal(0.5)
    nxt = _with_useful_marginal(0.9)
    assert info_reward(F, prev, nxt, 0.8) == 0.0
    assert info_reward(prev, prev, F, 0.8) == 0.0
    assert info_reward(prev, prev, prev, 0.8) == 0.0
    assert info_reward(prev, prev, nxt, 0.8) == pytest.approx(KL_EXAMPLE)

    above = Belief(np.array([[0.85, 0.0], [0.0, 0.15]]))
    assert info_reward(above, above, nxt, 0.8) == 0.0

    drop = info_reward(prev, prev, nxt, 0.8, InfoEstimator.ENTROPY_DROP)
    assert drop == pytest.approx(math.log(2) - (-(0.9 * math.log(0.9) + 0.1 * math.log(0.1))))


def test_accumulate_total_mi():
    assert accumulate_total_mi([]) == 0.0
    assert accumulate_total_mi([0.1, 0.2, 0.3]) == pytest.approx(0.6)

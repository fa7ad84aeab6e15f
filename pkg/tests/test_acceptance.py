"""
端到端验收：随机基线的决策时间区间，以及训练后策略相对随机基线的效用（slow）
"""

import pytest

from agent_service.agent_a2c import TrainConfig, train
from agent_service.evaluation import evaluate
from agent_service.policies import baseline_policy
from agent_service.release_env import EnvConfig
from tools.reward_tools import RewardKind

LS_LIST = [0.65, 0.8, 0.9, 0.95]
TRAIN_EPISODES = 20000
TRAIN_MAX_STEPS = 1000
EVAL_EPISODES = 2000


@pytest.mark.parametrize("name", ["pi_R1", "pi_R2"])
def test_random_baseline_tau_band_and_trend(gaussian_model, name):
    policy = baseline_policy(name)
    reports = [evaluate(gaussian_model, policy, ls, episodes=EVAL_EPISODES, seed=0) for ls in LS_LIST]
    for r in reports:
        assert 2.0 <= r.tau_mean <= 15.0, r
    for lo, hi in zip(reports, reports[1:]):
        assert hi.tau_mean >= lo.tau_mean - 2 * (hi.tau_se + lo.tau_se)


def _trained(model, ls, kind, seed=0, episodes=TRAIN_EPISODES):
    env_cfg = EnvConfig(model=model, ls=ls, reward_kind=kind, seed=seed, max_steps=TRAIN_MAX_STEPS)
    result = train(env_cfg, TrainConfig(episodes=episodes, seed=seed))
    return result.policy(name="pi_beta" if kind is RewardKind.BELIEF else "pi_I")


@pytest.mark.slow
def test_belief_reward_policy_beats_random(gaussian_model):
    ls = 0.8
    trained = evaluate(gaussian_model, _trained(gaussian_model, ls, RewardKind.BELIEF), ls, EVAL_EPISODES, seed=1)
    for name in ("pi_R1", "pi_R2"):
        rand = evaluate(gaussian_model, baseline_policy(name), ls, EVAL_EPISODES, seed=1)
        margin = 0.05 + 2 * (trained.conf_max_u_se + rand.conf_max_u_se)
        assert trained.conf_max_u >= rand.conf_max_u + margin
        assert trained.tau_mean > 5 * rand.tau_mean


@pytest.mark.slow
def test_regime_ordering(gaussian_model):
    ls = 0.9
    beta = evaluate(gaussian_model, _trained(gaussian_model, ls, RewardKind.BELIEF), ls, EVAL_EPISODES, seed=1)
    info = evaluate(gaussian_model, _trained(gaussian_model, ls, RewardKind.INFO), ls, EVAL_EPISODES, seed=1)
    assert info.mi_nats >= beta.mi_nats - 2 * (info.mi_se + beta.mi_se)
    assert beta.conf_max_u >= info.conf_max_u - 2 * (info.conf_max_u_se + beta.conf_max_u_se)
    assert info.tau_mean <= beta.tau_mean + 2 * (info.tau_se + beta.tau_se)


@pytest.mark.slow
def test_utilities_grow_with_threshold(gaussian_model):
    conf, mi = [], []
    for ls in LS_LIST:
        conf.append(evaluate(gaussian_model, _trained(gaussian_model, ls, RewardKind.BELIEF), ls, EVAL_EPISODES, 1))
        mi.append(evaluate(gaussian_model, _trained(gaussian_model, ls, RewardKind.INFO), ls, EVAL_EPISODES, 1))
    for lo, hi in zip(conf, conf[1:]):
        assert hi.conf_max_u >= lo.conf_max_u - 2 * (hi.conf_max_u_se + lo.conf_max_u_se)
    for lo, hi in zip(mi, mi[1:]):
        assert hi.mi_nats >= lo.mi_nats - 2 * (hi.mi_se + lo.mi_se)

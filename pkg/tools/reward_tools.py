"""
奖励工具

两种效用：终止时的信念奖励 r_β，以及逐步条件互信息及其实现值（信息奖励 r_I）。
对数一律取自然对数（nats），约定 0·log 0 = 0。
"""

import math
from enum import Enum
from typing import Iterable

import numpy as np

from models.errors import InconsistentUpdateError
from models.observation_model import ObservationModel
from tools.belief_tools import Belief, FinalState, State, is_final, marginal_secret, marginal_useful


class RewardKind(str, Enum):
    BELIEF = "belief"   # r_β
    INFO = "info"       # r_I


class InfoEstimator(str, Enum):
    KL = "kl"                      # KL(β_{t+1}(u) ‖ β_t(u))，非负
    ENTROPY_DROP = "entropy_drop"  # H(β_t(u)) − H(β_{t+1}(u))，可能为负


def belief_reward(x: State, ls: float) -> float:
    """r_β：信念越过阈值时给出 max_u β(u)，否则为 0；F 上为 0"""
    if isinstance(x, FinalState):
        return 0.0
    if marginal_secret(x).max() >= ls:
        return float(marginal_useful(x).max())
    return 0.0


def per_step_mi(belief: Belief, action_probs: np.ndarray, model: ObservationModel) -> float:
    """
    当前信念下一步发布的条件互信息 I(U; Z_t, A_t | β)

    joint[a,s,u,z] = q(z|a,s,u)·π(a)·β(s,u)；
    I = Σ p(z,a,u)·log[p(z,a,u) / (β(u)·p(z,a))]，联合概率为 0 的项贡献 0。
    """
    pi = np.asarray(action_probs, dtype=np.float64)
    joint = model.q * pi[:, None, None, None] * belief.p[None, :, :, None]
    p_azu = joint.sum(axis=1)              # [a, u, z]
    p_az = p_azu.sum(axis=1)               # [a, z]
    beta_u = marginal_useful(belief)       # [u]

    denom = beta_u[None, :, None] * p_az[:, None, :]
    mask = p_azu > 0
    value = np.sum(p_azu[mask] * np.log(p_azu[mask] / denom[mask]))
    return max(float(value), 0.0)


def _entropy(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def realized_info_reward(prev: Belief, next: Belief) -> float:
    """
    实现的信息奖励 KL(next(u) ‖ prev(u))

    对 (a,z) 取期望恰好等于 per_step_mi(prev, π)。

    Raises:
        InconsistentUpdateError: next(u) > 0 而 prev(u) = 0
    """
    p_next = marginal_useful(next)
    p_prev = marginal_useful(prev)
    support = p_next > 0
    if np.any(p_prev[support] <= 0):
        raise InconsistentUpdateError("posterior puts mass on a useful hypothesis the prior excludes")
    return max(float(np.sum(p_next[support] * np.log(p_next[support] / p_prev[support]))), 0.0)


def entropy_drop_reward(prev: Belief, next: Belief) -> float:
    """H(prev(u)) − H(next(u))，期望同为 per_step_mi，单次可为负"""
    return _entropy(marginal_useful(prev)) - _entropy(marginal_useful(next))


def info_reward(
    x: State,
    prev: Belief,
    next_or_final: State,
    ls: float,
    estimator: InfoEstimator = InfoEstimator.KL,
) -> float:
    """
    r_I：从阈值以下的信念做了一次更新时给出实现的信息量；x = F、或 x 已达阈值（直接进入 F，无更新）时为 0
    """
    if isinstance(x, FinalState) or isinstance(next_or_final, FinalState) or is_final(x, ls):
        return 0.0
    if InfoEstimator(estimator) is InfoEstimator.ENTROPY_DROP:
        return entropy_drop_reward(prev, next_or_final)
    return realized_info_reward(prev, next_or_final)


def accumulate_total_mi(per_step_values: Iterable[float]) -> float:
    """链式法则：I(U; Z^T, A^T) = Σ_t I(U; Z_t, A_t | Z^{t-1}, A^{t-1})"""
    return math.fsum(per_step_values)

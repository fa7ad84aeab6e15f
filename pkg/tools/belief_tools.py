"""
信念状态工具

对手对 (secret, useful) 假设对的联合后验、边缘分布、贝叶斯更新，以及带终止状态 F 的贝叶斯算子。
"""

import warnings
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from config.constants import BELIEF_SUM_TOL, DRIFT_WARN_TOL
from models.errors import ConfigError, ImpossibleObservationError
from models.observation_model import ObservationModel


class BeliefDriftWarning(RuntimeWarning):
    """更新后、重新归一化前的和偏离 1 超过 DRIFT_WARN_TOL"""


@dataclass(frozen=True)
class Belief:
    """N×M 单纯形上的联合信念 β(s,u)，构造后只读"""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=np.float64)
        if p.ndim != 2:
            raise ConfigError(f"belief must be an N×M table, got shape {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ConfigError("belief entries must be finite and ≥ 0")
        if abs(p.sum() - 1.0) > BELIEF_SUM_TOL:
            raise ConfigError(f"belief must sum to 1, got {p.sum()!r}")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def uniform(cls, n_secret: int, n_useful: int) -> "Belief":
        return cls(np.full((n_secret, n_useful), 1.0 / (n_secret * n_useful)))

    @classmethod
    def from_prior(cls, model: ObservationModel) -> "Belief":
        return cls(model.prior)

    @property
    def shape(self):
        return self.p.shape

    def flat(self) -> np.ndarray:
        """行优先展平，作为网络输入"""
        return self.p.reshape(-1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Belief):
            return NotImplemented
        return np.array_equal(self.p, other.p)


class FinalState:
    """吸收终止状态 F（单例）"""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "F"

    def __reduce__(self):
        return (FinalState, ())


F = FinalState()

State = Union[Belief, FinalState]


def marginal_secret(belief: Belief) -> np.ndarray:
    """β(s) = Σ_u β(s,u)"""
    return belief.p.sum(axis=1)


def marginal_useful(belief: Belief) -> np.ndarray:
    """β(u) = Σ_s β(s,u)"""
    return belief.p.sum(axis=0)


def _check_indices(model: ObservationModel, a: int, z: int) -> None:
    if not 0 <= a < model.spec.n_actions:
        raise ConfigError(f"action index {a} out of range [0, {model.spec.n_actions})")
    if not 0 <= z < model.spec.n_obs:
        raise ConfigError(f"observation index {z} out of range [0, {model.spec.n_obs})")


def bayes_update(belief: Belief, a: int, z: int, model: ObservationModel) -> Belief:
    """
    贝叶斯更新：β'(s,u) = q(z|a,s,u)β(s,u) / Σ q(z|a,ŝ,û)β(ŝ,û)

    策略项 π(a|β) 在分子分母中约掉，不作为输入。

    Raises:
        ImpossibleObservationError: 证据为 0
    """
    _check_indices(model, a, z)
    numerator = model.q[a, :, :, z] * belief.p
    evidence = numerator.sum()
    if not evidence > 0.0:
        raise ImpossibleObservationError(a, z)

    posterior = numerator / evidence
    drift = abs(posterior.sum() - 1.0)
    if drift > DRIFT_WARN_TOL:
        warnings.warn(
            f"belief drift {drift:.3e} after update (a={a}, z={z})", BeliefDriftWarning, stacklevel=2
        )
    return Belief(posterior / posterior.sum())


def is_final(x: State, ls: float) -> bool:
    """x = F 或 max_s β(s) ≥ ls"""
    if isinstance(x, FinalState):
        return True
    return bool(marginal_secret(x).max() >= ls)


def apply_bayes_operator(x: State, a: int, z: int, model: ObservationModel, ls: float) -> State:
    """
    贝叶斯算子 φ(x, z, a)

    - x = F → F
    - 更新前 max_s β(s) ≥ ls → F（不做更新）
    - 否则 → bayes_update(x, a, z)
    """
    if not 0.0 < ls <= 1.0:
        raise ConfigError(f"threshold ls must lie in (0, 1], got {ls}")
    if is_final(x, ls):
        return F
    return bayes_update(x, a, z, model)


def joint_likelihood(model: ObservationModel, actions: Sequence[int], observations: Sequence[int]) -> np.ndarray:
    """一段 (a,z) 序列的乘积似然 Π_t q(z_t|a_t,s,u)，形状 N×M"""
    like = np.ones((model.spec.n_secret, model.spec.n_useful))
    for a, z in zip(actions, observations):
        _check_indices(model, a, z)
        like = like * model.q[a, :, :, z]
    return like

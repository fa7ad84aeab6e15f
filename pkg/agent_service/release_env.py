"""
回合式信念 MDP 环境

每回合从先验抽取真实假设 (s,u)，按用户动作分布选择发布机制，从 q(·|a,s,u) 采样观测，
经贝叶斯算子更新对手信念并计算奖励。真实假设只记录在 EpisodeLog 中，策略只能看到信念。
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from config.constants import DEFAULTS
from models.errors import ConfigError, EpisodeFinishedError, NumericError
from models.observation_model import ObservationModel
from tools.belief_tools import (
    Belief,
    F,
    FinalState,
    State,
    apply_bayes_operator,
    is_final,
)
from tools.reward_tools import (
    InfoEstimator,
    RewardKind,
    belief_reward,
    info_reward,
    realized_info_reward,
)
from agent_service.policies import ActionDistribution, Policy
from agent_service.utils import episode_rng, write_csv_header


@dataclass(frozen=True)
class EnvConfig:
    model: ObservationModel
    ls: float
    reward_kind: RewardKind = RewardKind.BELIEF
    max_steps: int = DEFAULTS["max_steps"]
    seed: int = 0
    info_estimator: InfoEstimator = InfoEstimator.KL
    debug: bool = False

    def validate(self) -> None:
        if not 0.0 < self.ls <= 1.0:
            raise ConfigError(f"ls must lie in (0, 1], got {self.ls}")
        if int(self.max_steps) < 1:
            raise ConfigError(f"max_steps must be ≥ 1, got {self.max_steps}")
        RewardKind(self.reward_kind)
        InfoEstimator(self.info_estimator)


@dataclass(frozen=True)
class ExperienceTuple:
    """一次环境转移 (x_t, π(·|x_t), a_t, r_t, z_t, x_{t+1})"""

    state: Belief
    action_probs: np.ndarray
    action: int
    reward: float
    observation: int
    next_state: State
    truncated: bool = False
    info_gain: float = 0.0                 # 本步实现的 KL 信息量，与奖励类型无关
    posterior: Optional[Belief] = None     # 更新后的信念（即使 next_state 为 F）


@dataclass
class EpisodeLog:
    episode_index: int
    true_secret: int
    true_useful: int
    steps: List[ExperienceTuple] = field(default_factory=list)
    decision_time: Optional[int] = None    # 截断时为 None
    terminal_belief: Optional[Belief] = None
    truncated: bool = False
    total_reward: float = 0.0
    info_total: float = 0.0


def _sample(rng: np.random.Generator, probs: np.ndarray) -> int:
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(idx, len(probs) - 1)


class ReleaseEnv:
    """单线程环境实例；不同回合号使用互不相交的随机流"""

    def __init__(self, cfg: EnvConfig):
        cfg.validate()
        self.cfg = cfg
        self.model = cfg.model
        self._rng: Optional[np.random.Generator] = None
        self._truth: Optional[Tuple[int, int]] = None
        self._state: State = F
        self._t = 0
        self._done = True
        self.initial_reward = 0.0
        self.initial_belief: Optional[Belief] = None

    def reset(self, episode_index: int = 0) -> Tuple[Tuple[int, int], State]:
        """
        从先验抽取 (s,u)，初始状态为先验信念

        先验已满足 max_s β(s) ≥ ls 时回合立即结束（τ=0），initial_reward 按奖励类型给出。
        """
        cfg = self.cfg
        self._rng = episode_rng(cfg.seed, episode_index)
        n_useful = self.model.spec.n_useful
        flat = _sample(self._rng, self.model.prior.reshape(-1))
        self._truth = (flat // n_useful, flat % n_useful)
        self._t = 0

        belief = Belief.from_prior(self.model)
        self.initial_belief = belief
        if is_final(belief, cfg.ls):
            self.initial_reward = (
                belief_reward(belief, cfg.ls) if RewardKind(cfg.reward_kind) is RewardKind.BELIEF else 0.0
            )
            self._state = F
            self._done = True
        else:
            self.initial_reward = 0.0
            self._state = belief
            self._done = False
        return self._truth, self._state

    def _cross_check(self, state: Belief, probs: np.ndarray, a: int, z: int, posterior: Belief) -> None:
        # 含 π(a|β) 的原始贝叶斯式
        numerator = self.model.q[a, :, :, z] * probs[a] * state.p
        reference = numerator / numerator.sum()
        if not np.allclose(reference, posterior.p, rtol=0.0, atol=1e-12):
            raise NumericError(f"belief update mismatch at t={self._t} (a={a}, z={z})")

    def step(self, state: State, action_probs: np.ndarray) -> ExperienceTuple:
        """
        采样 a ~ π、z ~ q(·|a,s,u)，更新信念并计算奖励

        Raises:
            EpisodeFinishedError: 对 F 或已结束的回合调用
        """
        if isinstance(state, FinalState) or self._done:
            raise EpisodeFinishedError("cannot step a finished episode")
        if state is not self._state and state != self._state:
            raise ConfigError("step() must be called with the environment's current state")

        cfg = self.cfg
        probs = ActionDistribution(action_probs).probs
        if probs.size != self.model.spec.n_actions:
            raise ConfigError(f"policy gives {probs.size} action probabilities, model has {self.model.spec.n_actions} actions")
        s_true, u_true = self._truth
        a = _sample(self._rng, probs)
        z = _sample(self._rng, self.model.q[a, s_true, u_true])

        posterior = apply_bayes_operator(state, a, z, self.model, cfg.ls)
        if cfg.debug:
            self._cross_check(state, probs, a, z, posterior)
        gain = realized_info_reward(state, posterior)
        self._t += 1

        crossed = is_final(posterior, cfg.ls)
        next_state: State = F if crossed else posterior
        if RewardKind(cfg.reward_kind) is RewardKind.BELIEF:
            reward = belief_reward(posterior, cfg.ls)
        else:
            reward = info_reward(state, state, posterior, cfg.ls, cfg.info_estimator)

        truncated = not crossed and self._t >= cfg.max_steps
        self._state = next_state
        self._done = crossed or truncated
        return ExperienceTuple(
            state=state,
            action_probs=probs,
            action=a,
            reward=reward,
            observation=z,
            next_state=next_state,
            truncated=truncated,
            info_gain=gain,
            posterior=posterior,
        )


def run_episode(cfg: EnvConfig, policy: Policy, episode_index: int = 0) -> EpisodeLog:
    """跑完一个回合：reset 后循环 step，直到进入 F 或达到 max_steps"""
    env = ReleaseEnv(cfg)
    (s_true, u_true), state = env.reset(episode_index)
    log = EpisodeLog(episode_index=episode_index, true_secret=s_true, true_useful=u_true)

    if isinstance(state, FinalState):
        log.decision_time = 0
        log.terminal_belief = env.initial_belief
        log.total_reward = env.initial_reward
        return log

    while True:
        dist = policy.act(state)
        transition = env.step(state, dist.probs)
        log.steps.append(transition)
        if isinstance(transition.next_state, FinalState):
            log.decision_time = len(log.steps)
            break
        if transition.truncated:
            log.truncated = True
            break
        state = transition.next_state

    log.terminal_belief = log.steps[-1].posterior
    log.total_reward = math.fsum(tr.reward for tr in log.steps)
    log.info_total = math.fsum(tr.info_gain for tr in log.steps)
    return log


def dump_episode_trace(log: EpisodeLog, path: Union[str, Path]) -> None:
    """逐步轨迹 CSV：t, 行优先展平的信念, 动作分布, 动作, 观测, 奖励"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        write_csv_header(f)
        writer = csv.writer(f)
        if not log.steps:
            writer.writerow(["t", "action", "z", "reward"])
            return
        n, m = log.steps[0].state.shape
        n_actions = len(log.steps[0].action_probs)
        header = ["t"]
        header += [f"b_{s}_{u}" for s in range(n) for u in range(m)]
        header += [f"pi_{a}" for a in range(n_actions)]
        header += ["action", "z", "reward"]
        writer.writerow(header)
        for t, tr in enumerate(log.steps):
            row = [t]
            row += [repr(float(v)) for v in tr.state.flat()]
            row += [repr(float(v)) for v in tr.action_probs]
            row += [tr.action, tr.observation, repr(float(tr.reward))]
            writer.writerow(row)

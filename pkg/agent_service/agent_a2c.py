"""
A2C 训练器 - 优势 actor-critic

每步：actor 给出动作分布 → env.step → TD 误差 → critic 一步 ADAM → actor 一步 ADAM。
critic 最小化 δ²（半梯度，TD 目标视为常数）；actor 最小化 −ln π(a|x)·δ − c·H(π)。
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.constants import DEFAULTS
from models.errors import ConfigError, NumericError
from tools.belief_tools import FinalState, State
from tools.reward_tools import RewardKind
from agent_service.networks import AdamState, MlpParams, adam_step, backward, forward, init_mlp
from agent_service.policies import (
    ActorHeadKind,
    ActorPolicy,
    actor_act,
    head_entropy_grad,
    head_log_prob,
    head_log_prob_grad,
    head_probs,
)
from agent_service.release_env import EnvConfig, ExperienceTuple, ReleaseEnv
from agent_service.utils import fmt9, log_event, write_csv_header


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = DEFAULTS["gamma"]
    lr_actor: float = DEFAULTS["lr_actor"]
    lr_critic: float = DEFAULTS["lr_critic"]
    episodes: int = DEFAULTS["episodes"]
    v_max: Optional[float] = None
    seed: int = 0
    head: ActorHeadKind = ActorHeadKind.SOFTMAX_DIRECT
    entropy_coeff: float = 0.0
    hidden: Tuple[int, ...] = (64, 64)
    log_every: int = 0

    def validate(self) -> None:
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not (self.lr_actor > 0 and self.lr_critic > 0):
            raise ConfigError("learning rates must be > 0")
        if int(self.episodes) < 0:
            raise ConfigError(f"episodes must be ≥ 0, got {self.episodes}")
        if self.v_max is not None and not self.v_max > 0:
            raise ConfigError(f"v_max must be > 0, got {self.v_max}")
        if self.entropy_coeff < 0:
            raise ConfigError("entropy_coeff must be ≥ 0")
        if not self.hidden or any(int(h) < 1 for h in self.hidden):
            raise ConfigError(f"bad hidden sizes {self.hidden}")
        ActorHeadKind(self.head)

    def resolved_v_max(self, n_useful: int) -> float:
        """|V| 上界：覆盖两种奖励下的最大回报 max(1, ln M)"""
        if self.v_max is not None:
            return float(self.v_max)
        return max(1.0, math.log(n_useful))


@dataclass
class TrainCurveRow:
    episode: int
    ret: float
    tau: Optional[int]
    critic_loss_mean: float
    actor_loss_mean: float


@dataclass
class TrainResult:
    actor: MlpParams
    critic: MlpParams
    head: ActorHeadKind
    curve: List[TrainCurveRow] = field(default_factory=list)

    def policy(self, name: str = "actor", provenance: Optional[Dict[str, Any]] = None) -> ActorPolicy:
        return ActorPolicy(
            params=self.actor.copy(),
            head=self.head,
            name=name,
            critic=self.critic.copy(),
            provenance=provenance or {},
        )


# ========== 单步量 ==========

def td_error(r: float, gamma: float, v_next: float, v_curr: float) -> float:
    """δ = r + γ·V(x') − V(x)"""
    return float(r + gamma * v_next - v_curr)


def critic_value(critic: MlpParams, state: State) -> float:
    """V(x)；F 上为 0"""
    if isinstance(state, FinalState):
        return 0.0
    return float(forward(critic, state.flat())[0][0])


def _critic_delta_grad(critic: MlpParams, x: np.ndarray, target: float) -> Tuple[float, List[np.ndarray]]:
    """δ = target − V(x) 及 δ² 对参数的梯度（一次前向）"""
    v, cache = forward(critic, x)
    delta = target - float(v[0])
    if not math.isfinite(delta):
        raise NumericError(f"critic produced non-finite value {v.tolist()}")
    return delta, backward(critic, cache, np.array([-2.0 * delta]))


def critic_loss_grad(critic: MlpParams, x: np.ndarray, target: float) -> Tuple[float, List[np.ndarray]]:
    """ℓ_c = (target − V(x))²，target 视为常数"""
    delta, grads = _critic_delta_grad(critic, x, target)
    return delta * delta, grads


def actor_loss_grad(
    actor: MlpParams,
    head: ActorHeadKind,
    x: np.ndarray,
    a: int,
    delta: float,
    entropy_coeff: float = 0.0,
) -> Tuple[float, List[np.ndarray]]:
    """ℓ_a = −ln π(a|x)·δ − c·H(π(·|x))，δ 视为常数"""
    o, cache = forward(actor, x)
    if not np.all(np.isfinite(o)):
        raise NumericError(f"actor produced non-finite output {o.tolist()}")
    loss = -head_log_prob(o, a, head) * delta
    g_o = -delta * head_log_prob_grad(o, a, head)
    if entropy_coeff:
        p = head_probs(o, head)
        nz = p[p > 0]
        loss -= entropy_coeff * float(-np.sum(nz * np.log(nz)))
        g_o = g_o - entropy_coeff * head_entropy_grad(o, head)
    return float(loss), backward(actor, cache, g_o)


def critic_update(
    critic: MlpParams, adam: AdamState, transition: ExperienceTuple, cfg: TrainConfig
) -> Tuple[MlpParams, AdamState, float, float]:
    """
    critic 一步 ADAM

    Returns:
        (新参数, 新优化器状态, δ, 损失 δ²)
    """
    terminal = isinstance(transition.next_state, FinalState) or transition.truncated
    v_next = 0.0 if terminal else critic_value(critic, transition.next_state)
    target = transition.reward + cfg.gamma * v_next
    try:
        # target − V(x) 即 TD 误差 δ
        delta, grads = _critic_delta_grad(critic, transition.state.flat(), target)
    except NumericError as e:
        raise NumericError(f"critic update failed (reward={transition.reward}, target={target}): {e}") from e
    loss = delta * delta
    new_critic, new_adam = adam_step(adam, critic, grads, cfg.lr_critic)
    return new_critic, new_adam, delta, loss


def actor_update(
    actor: MlpParams,
    adam: AdamState,
    transition: ExperienceTuple,
    delta: float,
    cfg: TrainConfig,
) -> Tuple[MlpParams, AdamState, float]:
    """
    actor 一步 ADAM

    Returns:
        (新参数, 新优化器状态, 损失)
    """
    try:
        loss, grads = actor_loss_grad(
            actor, cfg.head, transition.state.flat(), transition.action, delta, cfg.entropy_coeff
        )
    except NumericError as e:
        raise NumericError(f"actor update failed (action={transition.action}, delta={delta}): {e}") from e
    new_actor, new_adam = adam_step(adam, actor, grads, cfg.lr_actor)
    return new_actor, new_adam, loss


# ========== 训练器 ==========

class A2CTrainer:
    """单线程在线 A2C 训练器（参数唯一写者）"""

    def __init__(
        self,
        env_cfg: EnvConfig,
        cfg: TrainConfig,
        signature: str = "a2c",
        log_path: Optional[Union[str, Path]] = None,
    ):
        env_cfg.validate()
        cfg.validate()
        self.env_cfg = env_cfg
        self.cfg = cfg
        self.signature = signature
        self.log_file = self._setup_logging(log_path)

        spec = env_cfg.model.spec
        n_in = spec.n_secret * spec.n_useful
        rng = np.random.default_rng(cfg.seed)
        self.actor = init_mlp([n_in, *cfg.hidden, spec.n_actions], rng, "linear")
        self.critic = init_mlp(
            [n_in, *cfg.hidden, 1], rng, "tanh", output_scale=cfg.resolved_v_max(spec.n_useful)
        )
        self.actor_adam = AdamState.zeros_like(self.actor)
        self.critic_adam = AdamState.zeros_like(self.critic)
        self.curve: List[TrainCurveRow] = []

    def _setup_logging(self, log_path: Optional[Union[str, Path]]) -> Optional[Path]:
        """设置 JSONL 事件日志路径"""
        if log_path is None:
            return None
        log_path = Path(log_path)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        return log_path

    def run_episode_update(self, episode_index: int) -> TrainCurveRow:
        """跑一个回合并逐步更新 critic 与 actor"""
        env = ReleaseEnv(self.env_cfg)
        _, state = env.reset(episode_index)
        rewards, critic_losses, actor_losses = [env.initial_reward], [], []
        tau: Optional[int] = 0 if isinstance(state, FinalState) else None

        steps = 0
        while not isinstance(state, FinalState):
            dist = actor_act(self.actor, self.cfg.head, state)
            transition = env.step(state, dist.probs)
            steps += 1

            self.critic, self.critic_adam, delta, c_loss = critic_update(
                self.critic, self.critic_adam, transition, self.cfg
            )
            self.actor, self.actor_adam, a_loss = actor_update(
                self.actor, self.actor_adam, transition, delta, self.cfg
            )
            rewards.append(transition.reward)
            critic_losses.append(c_loss)
            actor_losses.append(a_loss)

            if isinstance(transition.next_state, FinalState):
                tau = steps
                break
            if transition.truncated:
                break
            state = transition.next_state

        row = TrainCurveRow(
            episode=episode_index,
            ret=math.fsum(rewards),
            tau=tau,
            critic_loss_mean=float(np.mean(critic_losses)) if critic_losses else 0.0,
            actor_loss_mean=float(np.mean(actor_losses)) if actor_losses else 0.0,
        )
        return row

    def train(self) -> TrainResult:
        """按 cfg.episodes 训练；固定种子下单线程可逐位复现"""
        cfg = self.cfg
        if cfg.log_every:
            print(f"🚀 开始训练 {self.signature}: {cfg.episodes} 回合, ls={self.env_cfg.ls}, "
                  f"reward={RewardKind(self.env_cfg.reward_kind).value}, head={ActorHeadKind(cfg.head).value}")

        for ep in range(cfg.episodes):
            row = self.run_episode_update(ep)
            self.curve.append(row)
            if cfg.log_every and (ep + 1) % cfg.log_every == 0:
                window = self.curve[-cfg.log_every:]
                mean_ret = math.fsum(r.ret for r in window) / len(window)
                taus = [r.tau for r in window if r.tau is not None]
                mean_tau = float(np.mean(taus)) if taus else float("nan")
                print(f"📊 回合 {ep + 1}/{cfg.episodes}: 平均回报 {mean_ret:.4f}, 平均 τ {mean_tau:.1f}")
                log_event(self.log_file, self.signature, {
                    "event": "episode",
                    "episode": ep + 1,
                    "mean_return": mean_ret,
                    "mean_tau": mean_tau,
                    "critic_loss": row.critic_loss_mean,
                    "actor_loss": row.actor_loss_mean,
                })

        if not (self.actor.all_finite() and self.critic.all_finite()):
            raise NumericError("training produced non-finite parameters")
        log_event(self.log_file, self.signature, {"event": "done", "episodes": cfg.episodes})
        if cfg.log_every:
            print(f"✅ 训练完成: {self.signature}")
        return TrainResult(self.actor.copy(), self.critic.copy(), ActorHeadKind(cfg.head), list(self.curve))

    def __repr__(self) -> str:
        return f"A2CTrainer(signature='{self.signature}', episodes={self.cfg.episodes}, ls={self.env_cfg.ls})"


def train(
    env_cfg: EnvConfig,
    cfg: TrainConfig,
    signature: str = "a2c",
    log_path: Optional[Union[str, Path]] = None,
) -> TrainResult:
    """训练 actor 与 critic；episodes=0 时返回初始参数"""
    return A2CTrainer(env_cfg, cfg, signature, log_path).train()


def write_train_curve(
    curve: Sequence[TrainCurveRow], path: Union[str, Path], provenance: Optional[Dict[str, Any]] = None
) -> None:
    """训练曲线 CSV：episode, return, tau, critic_loss_mean, actor_loss_mean"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        write_csv_header(f, provenance)
        writer = csv.writer(f)
        writer.writerow(["episode", "return", "tau", "critic_loss_mean", "actor_loss_mean"])
        for row in curve:
            writer.writerow([
                row.episode,
                fmt9(row.ret),
                "" if row.tau is None else row.tau,
                fmt9(row.critic_loss_mean),
                fmt9(row.actor_loss_mean),
            ])

"""
策略 π(a|x)

随机基线策略与神经网络 actor（softmax 直接输出，或 Dirichlet 浓度取均值）两种头，以及策略文件读写。
策略只接收信念，从不接触真实假设。
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Protocol, Union

import numpy as np
from scipy.special import expit, logsumexp, softmax

from config.constants import BASELINE_POLICIES, BELIEF_SUM_TOL, LOG_FLOOR, POLICY_FORMAT_VERSION
from models.errors import ConfigError, ModelFormatError, NumericError
from tools.belief_tools import Belief, FinalState, State
from agent_service.networks import MlpParams, forward


class ActorHeadKind(str, Enum):
    SOFTMAX_DIRECT = "softmax"
    DIRICHLET_COMPOUND = "dirichlet"


@dataclass(frozen=True)
class ActionDistribution:
    """动作分布；构造时检查非负且和为 1"""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise ConfigError(f"action probabilities must be a non-empty vector, got shape {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p < 0) or abs(p.sum() - 1.0) > BELIEF_SUM_TOL:
            raise ConfigError(f"action probabilities {p.tolist()} are not a distribution")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def log_prob_of(self, a: int) -> float:
        return float(np.log(max(self.probs[a], LOG_FLOOR)))

    def entropy(self) -> float:
        nz = self.probs[self.probs > 0]
        return float(-np.sum(nz * np.log(nz)))


@dataclass(frozen=True)
class RandomPolicySpec:
    """与状态无关的固定动作分布"""

    probs: tuple
    name: str = "random"

    def __post_init__(self):
        # 复用 ActionDistribution 的校验
        ActionDistribution(np.asarray(self.probs, dtype=np.float64))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))


class Policy(Protocol):
    name: str

    def act(self, state: Belief) -> ActionDistribution:
        ...


# ========== 头变换 ==========

def softplus(o: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, o)


def dirichlet_mean(xi: np.ndarray) -> np.ndarray:
    """Dirichlet(ξ) 的均值 ξ_a / Σξ，即复合 Dirichlet-categorical 的动作边缘分布"""
    xi = np.asarray(xi, dtype=np.float64)
    return xi / xi.sum()


def _concentrations(o: np.ndarray) -> np.ndarray:
    return np.maximum(softplus(o), 1e-300)


def head_probs(o: np.ndarray, head: ActorHeadKind) -> np.ndarray:
    if ActorHeadKind(head) is ActorHeadKind.SOFTMAX_DIRECT:
        return softmax(o)
    return dirichlet_mean(_concentrations(o))


def head_log_prob(o: np.ndarray, a: int, head: ActorHeadKind) -> float:
    """数值稳定的 ln π(a)"""
    if ActorHeadKind(head) is ActorHeadKind.SOFTMAX_DIRECT:
        return float(o[a] - logsumexp(o))
    xi = _concentrations(o)
    return float(np.log(xi[a]) - np.log(xi.sum()))


def head_log_prob_grad(o: np.ndarray, a: int, head: ActorHeadKind) -> np.ndarray:
    """∂ ln π(a) / ∂o"""
    onehot = np.zeros_like(o)
    onehot[a] = 1.0
    if ActorHeadKind(head) is ActorHeadKind.SOFTMAX_DIRECT:
        return onehot - softmax(o)
    xi = _concentrations(o)
    g_xi = onehot / xi[a] - 1.0 / xi.sum()
    return g_xi * expit(o)


def head_entropy_grad(o: np.ndarray, head: ActorHeadKind) -> np.ndarray:
    """∂H(π) / ∂o"""
    p = head_probs(o, head)
    logp = np.log(np.maximum(p, LOG_FLOOR))
    g_p = -(logp + 1.0)
    centered = g_p - np.dot(p, g_p)
    if ActorHeadKind(head) is ActorHeadKind.SOFTMAX_DIRECT:
        return p * centered
    xi = _concentrations(o)
    return centered / xi.sum() * expit(o)


# ========== 策略 ==========

def random_policy_act(spec: RandomPolicySpec, state: State) -> ActionDistribution:
    """随机基线：忽略状态，直接返回固定分布"""
    return ActionDistribution(np.asarray(spec.probs))


def actor_logits(params: MlpParams, state: State) -> np.ndarray:
    if isinstance(state, FinalState):
        raise ConfigError("the final state is never fed to the actor")
    o, _ = forward(params, state.flat())
    if not np.all(np.isfinite(o)):
        raise NumericError(f"actor produced non-finite output {o.tolist()}")
    return o


def actor_act(params: MlpParams, head: ActorHeadKind, state: State) -> ActionDistribution:
    """actor 网络输出经头变换得到动作分布"""
    o = actor_logits(params, state)
    probs = head_probs(o, head)
    # 归一化后再除一次和，吸收浮点误差
    return ActionDistribution(probs / probs.sum())


class RandomPolicy:
    """随机基线策略 π_R"""

    def __init__(self, spec: RandomPolicySpec):
        self.spec = spec
        self.name = spec.name

    def act(self, state: Belief) -> ActionDistribution:
        return random_policy_act(self.spec, state)

    def __repr__(self) -> str:
        return f"RandomPolicy(name='{self.name}', probs={list(self.spec.probs)})"


@dataclass
class ActorPolicy:
    """冻结的神经网络策略；critic 随文件保存以便继续训练或诊断"""

    params: MlpParams
    head: ActorHeadKind = ActorHeadKind.SOFTMAX_DIRECT
    name: str = "actor"
    critic: Optional[MlpParams] = None
    provenance: Dict[str, Any] = field(default_factory=dict)

    def act(self, state: Belief) -> ActionDistribution:
        return actor_act(self.params, self.head, state)


def baseline_policy(name: str) -> RandomPolicy:
    """按名称取内置随机基线（pi_R1 / pi_R2）"""
    if name not in BASELINE_POLICIES:
        raise ConfigError(f"unknown baseline {name!r}, known: {sorted(BASELINE_POLICIES)}")
    return RandomPolicy(RandomPolicySpec(tuple(BASELINE_POLICIES[name]), name=name))


# ========== 策略文件 ==========

def _mlp_to_dict(params: MlpParams) -> Dict[str, Any]:
    return {
        "layer_sizes": params.sizes,
        "output_activation": params.output_activation,
        "output_scale": params.output_scale,
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
    }


def _mlp_from_dict(raw: Dict[str, Any]) -> MlpParams:
    if not isinstance(raw, dict):
        raise ModelFormatError(f"network entry must be an object, got {type(raw).__name__}")
    params = MlpParams(
        weights=[np.asarray(w, dtype=np.float64).reshape(len(w), -1) for w in raw["weights"]],
        biases=[np.asarray(b, dtype=np.float64) for b in raw["biases"]],
        output_activation=raw.get("output_activation", "linear"),
        output_scale=float(raw.get("output_scale", 1.0)),
    )
    if params.sizes != list(raw["layer_sizes"]):
        raise ModelFormatError(f"layer sizes {raw['layer_sizes']} do not match weights {params.sizes}")
    if not params.all_finite():
        raise ModelFormatError("policy file holds non-finite weights")
    return params


def save_policy(
    policy: Union[RandomPolicy, ActorPolicy],
    path: Union[str, Path],
    provenance: Optional[Dict[str, Any]] = None,
) -> None:
    """保存策略文件（JSON，带格式版本号与溯源信息）"""
    if isinstance(policy, RandomPolicy):
        body: Dict[str, Any] = {"kind": "random", "probs": list(policy.spec.probs)}
    else:
        body = {"kind": "actor", "head": ActorHeadKind(policy.head).value, "actor": _mlp_to_dict(policy.params)}
        if policy.critic is not None:
            body["critic"] = _mlp_to_dict(policy.critic)
        if provenance is None:
            provenance = policy.provenance
    doc = {"version": POLICY_FORMAT_VERSION, "name": policy.name, **body, "provenance": provenance or {}}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f)
        f.write("\n")


def load_policy(path: Union[str, Path]) -> Union[RandomPolicy, ActorPolicy]:
    """
    读取策略文件

    Raises:
        ModelFormatError: 文件损坏、版本不符或字段非法
    """
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"malformed policy file {path}: {e.msg}", e.lineno, e.colno) from e
    if not isinstance(raw, dict) or raw.get("version") != POLICY_FORMAT_VERSION:
        raise ModelFormatError(f"policy file {path} has an unsupported version")

    name = raw.get("name", Path(path).stem)
    if raw.get("provenance") is not None and not isinstance(raw["provenance"], dict):
        raise ModelFormatError(f"policy file {path}: field 'provenance' must be an object")
    try:
        if raw.get("kind") == "random":
            return RandomPolicy(RandomPolicySpec(tuple(raw["probs"]), name=name))
        if raw.get("kind") == "actor":
            critic = _mlp_from_dict(raw["critic"]) if raw.get("critic") else None
            return ActorPolicy(
                params=_mlp_from_dict(raw["actor"]),
                head=ActorHeadKind(raw["head"]),
                name=name,
                critic=critic,
                provenance=raw.get("provenance") or {},
            )
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        if isinstance(e, ModelFormatError):
            raise
        raise ModelFormatError(f"policy file {path} has bad fields: {e}") from e
    raise ModelFormatError(f"policy file {path} has unknown kind {raw.get('kind')!r}")

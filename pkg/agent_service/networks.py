"""
全连接网络与 ADAM 优化器（numpy 实现）

隐藏层为 ReLU；输出层为线性（actor 的头变换在 policies 中完成）或 v_max·tanh（critic）。
权重矩阵形状为 (fan_in, fan_out)，前向为 h @ W + b。
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from config.constants import ADAM_BETA1, ADAM_BETA2, ADAM_EPS
from models.errors import ConfigError, NumericError

OUTPUT_ACTIVATIONS = ("linear", "tanh")


@dataclass
class MlpParams:
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    output_activation: str = "linear"
    output_scale: float = 1.0

    def __post_init__(self):
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ConfigError(f"unknown output activation {self.output_activation!r}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ConfigError("need one bias vector per weight matrix")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ConfigError(f"layer {i}: weight {w.shape} and bias {b.shape} do not match")
            if i > 0 and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ConfigError(f"layer {i}: input width {w.shape[0]} does not chain")

    @property
    def sizes(self) -> List[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def arrays(self) -> List[np.ndarray]:
        """参数数组，顺序 [W0, b0, W1, b1, ...]，与梯度列表一致"""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    @classmethod
    def from_arrays(cls, arrays: Sequence[np.ndarray], like: "MlpParams") -> "MlpParams":
        return cls(
            weights=[np.array(a, dtype=np.float64) for a in arrays[0::2]],
            biases=[np.array(a, dtype=np.float64) for a in arrays[1::2]],
            output_activation=like.output_activation,
            output_scale=like.output_scale,
        )

    def copy(self) -> "MlpParams":
        return MlpParams.from_arrays([a.copy() for a in self.arrays()], self)

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())


def init_mlp(
    sizes: Sequence[int],
    rng: np.random.Generator,
    output_activation: str = "linear",
    output_scale: float = 1.0,
    output_gain: float = 0.1,
) -> MlpParams:
    """He 初始化隐藏层；输出层再乘 output_gain，使初始策略接近均匀、初始价值接近 0"""
    if len(sizes) < 2 or any(int(s) < 1 for s in sizes):
        raise ConfigError(f"bad layer sizes {list(sizes)}")
    weights, biases = [], []
    n_layers = len(sizes) - 1
    for i in range(n_layers):
        fan_in, fan_out = int(sizes[i]), int(sizes[i + 1])
        w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
        if i == n_layers - 1:
            w *= output_gain
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases, output_activation, float(output_scale))


def zero_mlp(sizes: Sequence[int], output_activation: str = "linear", output_scale: float = 1.0) -> MlpParams:
    weights = [np.zeros((int(sizes[i]), int(sizes[i + 1]))) for i in range(len(sizes) - 1)]
    biases = [np.zeros(int(s)) for s in sizes[1:]]
    return MlpParams(weights, biases, output_activation, float(output_scale))


@dataclass
class ForwardCache:
    inputs: List[np.ndarray] = field(default_factory=list)   # 各层输入
    pre: List[np.ndarray] = field(default_factory=list)      # 各层仿射输出


def forward(params: MlpParams, x: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
    """affine → ReLU 链，最后一层按 output_activation 输出"""
    h = np.asarray(x, dtype=np.float64)
    if h.shape != (params.sizes[0],):
        raise ConfigError(f"input has shape {h.shape}, network expects ({params.sizes[0]},)")
    cache = ForwardCache()
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        cache.inputs.append(h)
        z = h @ w + b
        cache.pre.append(z)
        h = np.maximum(z, 0.0) if i < last else z
    if params.output_activation == "tanh":
        h = params.output_scale * np.tanh(h)
    return h, cache


def backward(params: MlpParams, cache: ForwardCache, grad_out: np.ndarray) -> List[np.ndarray]:
    """
    反向传播

    Args:
        grad_out: 损失对网络（激活后）输出的梯度

    Returns:
        与 params.arrays() 同序的梯度列表
    """
    g = np.asarray(grad_out, dtype=np.float64)
    if params.output_activation == "tanh":
        t = np.tanh(cache.pre[-1])
        g = g * params.output_scale * (1.0 - t * t)

    grads: List[np.ndarray] = [None] * (2 * len(params.weights))
    for i in range(len(params.weights) - 1, -1, -1):
        grads[2 * i] = np.outer(cache.inputs[i], g)
        grads[2 * i + 1] = g.copy()
        if i > 0:
            g = (params.weights[i] @ g) * (cache.pre[i - 1] > 0)
    if not all(np.all(np.isfinite(gr)) for gr in grads):
        raise NumericError("non-finite gradient in backward pass")
    return grads


@dataclass
class AdamState:
    m: List[np.ndarray]
    v: List[np.ndarray]
    step: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def zeros_like(cls, params: MlpParams) -> "AdamState":
        arrays = params.arrays()
        return cls(m=[np.zeros_like(a) for a in arrays], v=[np.zeros_like(a) for a in arrays])


def adam_step(
    adam: AdamState, params: MlpParams, grads: Sequence[np.ndarray], lr: float
) -> Tuple[MlpParams, AdamState]:
    """带偏差修正的 ADAM 一步；返回新的参数与优化器状态，不修改输入"""
    arrays = params.arrays()
    if len(grads) != len(arrays) or any(g.shape != a.shape for g, a in zip(grads, arrays)):
        raise ConfigError("gradient shapes do not match parameters")

    t = adam.step + 1
    b1, b2 = adam.beta1, adam.beta2
    new_m, new_v, new_arrays = [], [], []
    for a, g, m, v in zip(arrays, grads, adam.m, adam.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        new_arrays.append(a - lr * m_hat / (np.sqrt(v_hat) + adam.eps))
        new_m.append(m)
        new_v.append(v)
    new_adam = AdamState(new_m, new_v, t, adam.beta1, adam.beta2, adam.eps)
    return MlpParams.from_arrays(new_arrays, params), new_adam

#!/usr/bin/env python3
"""
测试用小实例生成器
手工构造可精确推算的观测模型，以及随机实例，用于测试与 oracle 对照
"""

import sys
from pathlib import Path

import numpy as np

project_root = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(project_root))

from models.observation_model import (  # noqa: E402
    GeneratorSpec,
    ModelSpec,
    ObservationModel,
    generate_gaussian_model,
    save_model,
    validate,
)


def reveal_model() -> ObservationModel:
    """
    N=M=2, |A|=2, |Z|=2：动作 0 直接暴露秘密 (z=s)，动作 1 直接暴露有用变量 (z=u)；均匀先验
    """
    spec = ModelSpec(n_secret=2, n_useful=2, n_actions=2, n_obs=2)
    q = np.zeros(spec.shape)
    for s in range(2):
        for u in range(2):
            q[0, s, u, s] = 1.0
            q[1, s, u, u] = 1.0
    return ObservationModel(spec=spec, q=q, prior=np.full((2, 2), 0.25))


def uninformative_model(n: int = 2, m: int = 2, n_actions: int = 2, n_obs: int = 3) -> ObservationModel:
    """所有行都是 z 上的均匀分布，信念永远不变"""
    spec = ModelSpec(n_secret=n, n_useful=m, n_actions=n_actions, n_obs=n_obs)
    q = np.full(spec.shape, 1.0 / n_obs)
    return ObservationModel(spec=spec, q=q, prior=np.full((n, m), 1.0 / (n * m)))


def identity_useful_model(n: int = 2, m: int = 3, n_actions: int = 2) -> ObservationModel:
    """z 恒等于 u（与 s、a 无关），一次观测完全暴露有用变量；均匀先验"""
    spec = ModelSpec(n_secret=n, n_useful=m, n_actions=n_actions, n_obs=m)
    q = np.zeros(spec.shape)
    for u in range(m):
        q[:, :, u, u] = 1.0
    return ObservationModel(spec=spec, q=q, prior=np.full((n, m), 1.0 / (n * m)))


def noisy_tiny_model() -> ObservationModel:
    """
    N=M=2, |A|=2, |Z|=3 的带噪信道，穷举 oracle 对照用

    动作 0 偏向暴露秘密，动作 1 偏向暴露有用变量；每行都严格为正
    """
    spec = ModelSpec(n_secret=2, n_useful=2, n_actions=2, n_obs=3)
    q = np.empty(spec.shape)
    leaning = {0: [0.6, 0.3, 0.1], 1: [0.1, 0.3, 0.6]}
    for s in range(2):
        for u in range(2):
            q[0, s, u] = leaning[s]
            q[1, s, u] = [0.5, 0.25, 0.25] if u == 0 else [0.2, 0.3, 0.5]
    return ObservationModel(spec=spec, q=q, prior=np.full((2, 2), 0.25))


def random_instance(
    rng: np.random.Generator, n: int = 2, m: int = 2, n_actions: int = 2, n_obs: int = 3
) -> ObservationModel:
    """Dirichlet(1) 抽取的随机信道与随机先验；所有项几乎必然为正"""
    spec = ModelSpec(n_secret=n, n_useful=m, n_actions=n_actions, n_obs=n_obs)
    q = rng.dirichlet(np.ones(n_obs), size=spec.shape[:3])
    prior = rng.dirichlet(np.ones(n * m)).reshape(n, m)
    return ObservationModel(spec=spec, q=q, prior=prior)


def default_gaussian_model(seed: int = 0) -> ObservationModel:
    """3×3×3×21 高斯派生模型（默认参数）"""
    return generate_gaussian_model(GeneratorSpec(spec=ModelSpec(3, 3, 3, 21), seed=seed))


def generate_test_data(out_dir: str = "data/test_models") -> list:
    """把手工实例写成模型文件，返回文件路径列表"""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    print(f"📊 生成测试模型: {out}")

    written = []
    for name, model in (
        ("reveal", reveal_model()),
        ("uninformative", uninformative_model()),
        ("noisy_tiny", noisy_tiny_model()),
        ("gaussian_3x3x3x21", default_gaussian_model()),
    ):
        path = out / f"{name}.json"
        save_model(model, path, provenance={"generator": "tests/generate_test_data.py", "name": name})
        written.append(str(path))
        print(f"  ✅ {path}")
    return written


def verify_data(paths: list) -> bool:
    """逐个检查模型不变量"""
    print("\n🔍 验证模型...")
    from models.observation_model import load_model

    for path in paths:
        problems = validate(load_model(path))
        if problems:
            print(f"❌ {path}: {problems[0]}")
            return False
    print("✅ 模型验证通过")
    return True


if __name__ == "__main__":
    verify_data(generate_test_data())

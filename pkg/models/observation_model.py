"""
观测模型 q(z|a,s,u)

包含假设空间规格、观测信道张量与先验、高斯派生的模型生成器，以及模型文件的读写和校验。
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import stats

from config.constants import MODEL_FORMAT_VERSION, ROW_SUM_TOL
from models.errors import ConfigError, ModelFormatError, UnsupportedRecipeError


@dataclass(frozen=True)
class ModelSpec:
    """假设空间规格：N 个秘密假设、M 个有用假设、|A| 个发布机制、|Z| 个观测值"""

    n_secret: int
    n_useful: int
    n_actions: int
    n_obs: int

    def validate(self) -> None:
        for name in ("n_secret", "n_useful", "n_actions"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{name} must be an integer ≥ 1, got {value!r}")
        if not isinstance(self.n_obs, (int, np.integer)) or self.n_obs < 2:
            raise ConfigError(f"n_obs must be an integer ≥ 2, got {self.n_obs!r}")

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return (self.n_actions, self.n_secret, self.n_useful, self.n_obs)

    def to_dict(self) -> Dict[str, int]:
        return {
            "n_secret": int(self.n_secret),
            "n_useful": int(self.n_useful),
            "n_actions": int(self.n_actions),
            "n_obs": int(self.n_obs),
        }


@dataclass(frozen=True)
class GeneratorSpec:
    """高斯派生生成器参数；σ 在 [sigma_low, sigma_high] 上均匀抽取，观测网格为等距点"""

    spec: ModelSpec
    sigma_low: float = 0.5
    sigma_high: float = 1.5
    grid_low: float = -3.0
    grid_high: float = 6.0
    seed: int = 0

    def validate(self) -> None:
        self.spec.validate()
        if not (0.0 < self.sigma_low <= self.sigma_high):
            raise ConfigError(
                f"need 0 < sigma_low ≤ sigma_high, got [{self.sigma_low}, {self.sigma_high}]"
            )
        if not self.grid_low < self.grid_high:
            raise ConfigError(f"need grid_low < grid_high, got [{self.grid_low}, {self.grid_high}]")

    def grid(self) -> np.ndarray:
        return np.linspace(self.grid_low, self.grid_high, self.spec.n_obs)


@dataclass(frozen=True)
class ObservationModel:
    """
    观测信道与先验

    q 的下标顺序为 [action][secret][useful][observation]，prior 为 N×M 联合先验。
    构造后数组只读；构造时只检查形状，概率不变量由 validate() 报告。
    """

    spec: ModelSpec
    q: np.ndarray
    prior: np.ndarray
    grid: Optional[np.ndarray] = None
    sigmas: Optional[np.ndarray] = None
    seed: Optional[int] = None
    provenance: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        q = np.array(self.q, dtype=np.float64)
        prior = np.array(self.prior, dtype=np.float64)
        if q.shape != self.spec.shape:
            raise ConfigError(f"q has shape {q.shape}, spec requires {self.spec.shape}")
        if prior.shape != (self.spec.n_secret, self.spec.n_useful):
            raise ConfigError(
                f"prior has shape {prior.shape}, spec requires "
                f"{(self.spec.n_secret, self.spec.n_useful)}"
            )
        q.setflags(write=False)
        prior.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "prior", prior)
        for name in ("grid", "sigmas"):
            value = getattr(self, name)
            if value is not None:
                arr = np.array(value, dtype=np.float64)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ObservationModel):
            return NotImplemented
        return (
            self.spec == other.spec
            and np.array_equal(self.q, other.q)
            and np.array_equal(self.prior, other.prior)
        )


@dataclass(frozen=True)
class Violation:
    """一条不变量违例"""

    kind: str
    index: Tuple[int, ...]
    detail: str

    def __str__(self) -> str:
        return f"{self.kind} at {self.index}: {self.detail}"


def generate_gaussian_model(gen: GeneratorSpec) -> ObservationModel:
    """
    生成高斯派生观测模型

    对动作 a，被区分的秘密为 s* = (N-1) - a；s ≠ s* 的行均值为 0，s = s* 的行均值为 u+1。
    每行 σ 按 (a,s,u) 字典序独立地从 [sigma_low, sigma_high] 均匀抽取，
    在等距网格上取高斯密度后按行归一化。先验为均匀分布。

    Raises:
        ConfigError: 参数非法
        UnsupportedRecipeError: n_actions > n_secret
    """
    gen.validate()
    spec = gen.spec
    if spec.n_actions > spec.n_secret:
        raise UnsupportedRecipeError(
            f"distinguished-secret recipe needs n_actions ≤ n_secret, "
            f"got {spec.n_actions} > {spec.n_secret}"
        )

    rng = np.random.default_rng(gen.seed)
    grid = gen.grid()
    q = np.empty(spec.shape, dtype=np.float64)
    sigmas = np.empty(spec.shape[:3], dtype=np.float64)

    for a in range(spec.n_actions):
        s_star = (spec.n_secret - 1) - a
        for s in range(spec.n_secret):
            for u in range(spec.n_useful):
                sigma = rng.uniform(gen.sigma_low, gen.sigma_high)
                mu = float(u + 1) if s == s_star else 0.0
                row = stats.norm.pdf(grid, loc=mu, scale=sigma)
                q[a, s, u] = row / row.sum()
                sigmas[a, s, u] = sigma

    prior = np.full((spec.n_secret, spec.n_useful), 1.0 / (spec.n_secret * spec.n_useful))
    return ObservationModel(spec=spec, q=q, prior=prior, grid=grid, sigmas=sigmas, seed=gen.seed)


def validate(model: ObservationModel) -> List[Violation]:
    """
    校验观测模型的全部不变量

    Returns:
        违例列表；空列表表示模型合法
    """
    violations: List[Violation] = []
    q, prior = model.q, model.prior

    for idx in zip(*np.nonzero(~np.isfinite(q))):
        violations.append(Violation("non-finite", tuple(int(i) for i in idx), f"q={q[idx]!r}"))
    for idx in zip(*np.nonzero(q < 0)):
        violations.append(Violation("negative", tuple(int(i) for i in idx), f"q={q[idx]!r}"))

    row_sums = q.sum(axis=3)
    for idx in zip(*np.nonzero(~(np.abs(row_sums - 1.0) <= ROW_SUM_TOL))):
        violations.append(
            Violation("normalization", tuple(int(i) for i in idx), f"row sum={row_sums[idx]!r}")
        )

    for idx in zip(*np.nonzero(~np.isfinite(prior) | (prior < 0))):
        violations.append(
            Violation("prior-negative", tuple(int(i) for i in idx), f"prior={prior[idx]!r}")
        )
    total = prior.sum()
    if not abs(total - 1.0) <= ROW_SUM_TOL:
        violations.append(Violation("prior-normalization", (), f"prior sum={total!r}"))

    return violations


def _model_to_dict(model: ObservationModel, provenance: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    # json 以 repr 输出 float，往返精确
    return {
        "version": MODEL_FORMAT_VERSION,
        "spec": model.spec.to_dict(),
        "grid": None if model.grid is None else model.grid.tolist(),
        "seed": model.seed,
        "sigmas": None if model.sigmas is None else model.sigmas.tolist(),
        "q": model.q.tolist(),
        "prior": model.prior.tolist(),
        "provenance": provenance if provenance is not None else model.provenance,
    }


def save_model(
    model: ObservationModel, path: Union[str, Path], provenance: Optional[Dict[str, Any]] = None
) -> None:
    """保存模型为 JSON 文本（带格式版本号）"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_model_to_dict(model, provenance), f, indent=1)
        f.write("\n")


def load_model(path: Union[str, Path]) -> ObservationModel:
    """
    读取模型文件

    Raises:
        ModelFormatError: 文件截断/不可解析（带行列位置）、版本不符、字段缺失或不变量违例
    """
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"malformed model file {path}: {e.msg}", e.lineno, e.colno) from e

    if not isinstance(raw, dict):
        raise ModelFormatError(f"model file {path} must hold a JSON object")
    version = raw.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"model file {path} has version {version!r}, expected {MODEL_FORMAT_VERSION}"
        )

    for key in ("spec", "provenance"):
        if raw.get(key) is not None and not isinstance(raw[key], dict):
            raise ModelFormatError(f"model file {path}: field {key!r} must be an object, got {type(raw[key]).__name__}")

    try:
        spec = ModelSpec(**{k: int(v) for k, v in raw["spec"].items()})
        spec.validate()
        model = ObservationModel(
            spec=spec,
            q=np.asarray(raw["q"], dtype=np.float64),
            prior=np.asarray(raw["prior"], dtype=np.float64),
            grid=raw.get("grid"),
            sigmas=raw.get("sigmas"),
            seed=raw.get("seed"),
            provenance=raw.get("provenance") or {},
        )
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise ModelFormatError(f"model file {path} is missing or has bad fields: {e}") from e

    violations = validate(model)
    if violations:
        shown = "; ".join(str(v) for v in violations[:5])
        raise ModelFormatError(f"model file {path} violates invariants: {shown}")
    return model

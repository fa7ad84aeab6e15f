"""
配置管理模块
提供分层参数解析（命令行 > 配置文件 > 环境变量 > 默认表）和运行时配置持久化
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

from dotenv import load_dotenv

from config.constants import DEFAULTS
from models.errors import ConfigError

load_dotenv()

ENV_PREFIX = "RELEASE_"


def _resolve_runtime_env_path() -> str:
    """
    解析运行时配置路径

    策略：
    1. 从环境变量 RUNTIME_ENV_PATH 读取
    2. 未设置则使用默认值 "data/.runtime_env.json"
    3. 相对路径则基于项目根目录解析
    4. 自动创建目录
    """
    path = os.environ.get("RUNTIME_ENV_PATH")

    if not path:
        path = "data/.runtime_env.json"

    if not os.path.isabs(path):
        base_dir = Path(__file__).resolve().parents[1]  # 项目根目录
        path = str(base_dir / path)

    Path(path).parent.mkdir(parents=True, exist_ok=True)

    return path


def _load_runtime_env() -> dict:
    """加载运行时配置"""
    path = _resolve_runtime_env_path()
    try:
        if os.path.exists(path):
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
                if isinstance(data, dict):
                    return data
    except (OSError, json.JSONDecodeError):
        pass
    return {}


def get_config_value(key: str, default=None):
    """
    获取配置值（优先级：运行时文件 > 环境变量）

    Args:
        key: 配置键名
        default: 默认值

    Returns:
        配置值或默认值
    """
    runtime_env = _load_runtime_env()
    if key in runtime_env:
        return runtime_env[key]
    return os.getenv(key, default)


def write_config_value(key: str, value: Any) -> None:
    """
    写入配置值到运行时文件

    Args:
        key: 配置键名
        value: 配置值（必须是可JSON序列化的）
    """
    path = _resolve_runtime_env_path()
    runtime_env = _load_runtime_env()
    runtime_env[key] = value

    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(runtime_env, f, ensure_ascii=False, indent=4)
            f.flush()
    except OSError as e:
        print(f"⚠️ 写入运行时配置 {path} 失败: {e}")


def normalize_key(key: str) -> str:
    """flag 名与配置键统一为下划线形式：--lr-actor → lr_actor"""
    return key.lstrip("-").replace("-", "_")


def load_config_file(path: str, section: Optional[str] = None) -> Dict[str, Any]:
    """
    读取 JSON 配置文件

    顶层为扁平键值（键名即 flag 名），可选的以子命令命名的嵌套对象覆盖同名扁平键。

    Raises:
        ConfigError: 文件不可解析、不是对象或包含未知键
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path}: line {e.lineno} column {e.colno}: {e.msg}") from e
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e

    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")

    flat: Dict[str, Any] = {}
    nested: Dict[str, Any] = {}
    for key, value in raw.items():
        if isinstance(value, dict):
            if section is not None and normalize_key(key) == normalize_key(section):
                nested = {normalize_key(k): v for k, v in value.items()}
            continue
        flat[normalize_key(key)] = value
    flat.update(nested)

    unknown = sorted(k for k in flat if k not in DEFAULTS and k not in _EXTRA_KEYS)
    if unknown:
        raise ConfigError(f"config file {path}: unknown keys {unknown}")
    return flat


# 没有默认值、但允许出现在配置文件中的键（路径类参数）
_EXTRA_KEYS = {"model", "policy", "policies", "probs", "out", "log", "name", "config"}


def _env_value(key: str) -> Optional[str]:
    return os.getenv(ENV_PREFIX + key.upper())


def resolve_config(
    flags: Dict[str, Any],
    keys: Iterable[str],
    config_path: Optional[str] = None,
    section: Optional[str] = None,
    fallbacks: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """
    按 命令行 > 配置文件 > 环境变量 > DEFAULTS 的优先级解析参数

    Args:
        flags: argparse 结果（未给出的参数为 None）
        keys: 本子命令关心的键
        config_path: 可选 JSON 配置文件
        section: 子命令名，用于选取配置文件中的嵌套覆盖
        fallbacks: 同名键在本子命令下改用的默认值（取自 DEFAULTS 的其他条目）

    Returns:
        已解析的参数字典；环境变量中的值保持字符串形式，由调用方做类型转换
    """
    file_values = load_config_file(config_path, section) if config_path else {}
    resolved: Dict[str, Any] = {}
    for key in keys:
        key = normalize_key(key)
        value = flags.get(key)
        if value is None:
            value = file_values.get(key)
        if value is None:
            value = _env_value(key)
        if value is None:
            value = (fallbacks or {}).get(key, DEFAULTS.get(key))
        resolved[key] = value
    return resolved


def parse_float_list(value: Any, what: str) -> List[float]:
    """把 "0.3,0.6,0.1" 或 [0.3, 0.6, 0.1] 解析为浮点列表"""
    if value is None:
        raise ConfigError(f"{what} is required")
    if isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [v for v in str(value).split(",") if v.strip()]
    try:
        return [float(v) for v in items]
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{what}: cannot parse {value!r} as a list of numbers") from e


def parse_str_list(value: Any, what: str) -> List[str]:
    if value is None:
        raise ConfigError(f"{what} is required")
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return [v.strip() for v in str(value).split(",") if v.strip()]


def as_int(value: Any, what: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{what}: expected an integer, got {value!r}") from e


def as_float(value: Any, what: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{what}: expected a number, got {value!r}") from e

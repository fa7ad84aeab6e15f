"""
agent_service 公共工具：随机数流、JSONL 事件日志、CSV 版本与溯源头
"""

import json
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, TextIO, Union

import numpy as np

from config.constants import CSV_FORMAT_VERSION
from models.errors import ModelFormatError


def episode_rng(seed: int, episode_index: int) -> np.random.Generator:
    """主种子按回合号拆分出独立随机流，与调度顺序无关"""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(episode_index),)))


def log_event(log_file: Optional[Path], signature: str, payload: Dict[str, Any]) -> None:
    """追加一条 JSONL 事件"""
    if log_file is None:
        return
    log_entry = {
        "timestamp": datetime.now().isoformat(),
        "signature": signature,
        **payload,
    }
    with open(log_file, "a", encoding="utf-8") as f:
        f.write(json.dumps(log_entry, ensure_ascii=False) + "\n")


FORMAT_PREFIX = "# format_version: "
PROVENANCE_PREFIX = "# provenance: "


def write_csv_header(f: TextIO, provenance: Optional[Dict[str, Any]] = None) -> None:
    """
    CSV 头部注释：首行 '# format_version: N'，给出 provenance 时第二行 '# provenance: {...}'
    """
    f.write(f"{FORMAT_PREFIX}{CSV_FORMAT_VERSION}\n")
    if provenance is not None:
        f.write(PROVENANCE_PREFIX + json.dumps(provenance, sort_keys=True) + "\n")


def _comment_lines(path: Union[str, Path]) -> List[str]:
    lines = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            lines.append(line.rstrip("\n"))
    return lines


def read_provenance(path: Union[str, Path]) -> Optional[Dict[str, Any]]:
    for line in _comment_lines(path):
        if line.startswith(PROVENANCE_PREFIX):
            return json.loads(line[len(PROVENANCE_PREFIX):])
    return None


def check_csv_format(path: Union[str, Path]) -> int:
    """
    校验 CSV 头部的格式版本

    Raises:
        ModelFormatError: 缺少版本行或版本不符
    """
    for line in _comment_lines(path):
        if line.startswith(FORMAT_PREFIX):
            raw = line[len(FORMAT_PREFIX):].strip()
            try:
                version = int(raw)
            except ValueError:
                raise ModelFormatError(f"{path}: bad CSV format version {raw!r}") from None
            if version != CSV_FORMAT_VERSION:
                raise ModelFormatError(f"{path}: CSV format version {version}, expected {CSV_FORMAT_VERSION}")
            return version
    raise ModelFormatError(f"{path}: missing '{FORMAT_PREFIX.strip()}' header line")


def data_lines(f: Iterable[str]) -> List[str]:
    """跳过 '#' 注释行"""
    return [line for line in f if not line.startswith("#")]


def fmt9(x: float) -> str:
    """9 位有效数字"""
    return format(float(x), ".9g")

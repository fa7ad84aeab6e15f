import json

import pytest

from config.config import (
    as_float,
    as_int,
    get_config_value,
    load_config_file,
    parse_float_list,
    parse_str_list,
    resolve_config,
    write_config_value,
)
from config.constants import DEFAULTS
from models.errors import ConfigError


def test_defaults_when_nothing_given(monkeypatch):
    monkeypatch.delenv("RELEASE_LS", raising=False)
    monkeypatch.delenv("RELEASE_GAMMA", raising=False)
    cfg = resolve_config({"ls": None}, ["ls", "gamma"])
    assert cfg == {"ls": DEFAULTS["ls"], "gamma": DEFAULTS["gamma"]}


def test_precedence_flag_file_env_default(tmp_path, monkeypatch):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"ls": 0.9, "gamma": 0.95, "lr-actor": 0.01}))
    monkeypatch.setenv("RELEASE_LS", "0.7")
    monkeypatch.setenv("RELEASE_GAMMA", "0.5")
    monkeypatch.setenv("RELEASE_SEED", "11")

    cfg = resolve_config({"ls": 0.65}, ["ls", "gamma", "lr_actor", "seed", "episodes"], str(path))
    assert cfg["ls"] == 0.65          # 命令行
    assert cfg["gamma"] == 0.95       # 配置文件
    assert cfg["lr_actor"] == 0.01
    assert cfg["seed"] == "11"        # 环境变量（字符串，调用方转换）
    assert cfg["episodes"] == DEFAULTS["episodes"]


def test_subcommand_section_overrides_flat_keys(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"episodes": 100, "eval": {"episodes": 7}, "train": {"episodes": 9}}))
    assert load_config_file(str(path), "eval")["episodes"] == 7
    assert load_config_file(str(path), "sweep")["episodes"] == 100


def test_fallbacks_replace_default():
    cfg = resolve_config({}, ["episodes"], fallbacks={"episodes": DEFAULTS["eval_episodes"]})
    assert cfg["episodes"] == DEFAULTS["eval_episodes"]


def test_config_file_errors(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"lss": 0.9}))
    with pytest.raises(ConfigError, match="unknown keys"):
        load_config_file(str(path))

    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config_file(str(path))

    path.write_text('{"ls": ')
    with pytest.raises(ConfigError, match="line 1"):
        load_config_file(str(path))

    with pytest.raises(ConfigError):
        load_config_file(str(tmp_path / "missing.json"))


def test_runtime_store(runtime_env):
    write_config_value("LAST_RUN", {"command": "eval"})
    assert get_config_value("LAST_RUN") == {"command": "eval"}
    assert json.loads(runtime_env.read_text())["LAST_RUN"] == {"command": "eval"}
    assert get_config_value("NOT_SET_ANYWHERE", "fallback") == "fallback"


def test_parsers():
    assert parse_float_list("0.3, 0.6,0.1", "--probs") == [0.3, 0.6, 0.1]
    assert parse_float_list([0.5, 0.5], "--probs") == [0.5, 0.5]
    assert parse_str_list("pi_R1, a.json", "--policies") == ["pi_R1", "a.json"]
    assert as_int("12", "--n") == 12
    assert as_float("1e-3", "--lr") == 0.001
    with pytest.raises(ConfigError):
        parse_float_list("0.3,abc", "--probs")
    with pytest.raises(ConfigError):
        parse_float_list(None, "--probs")
    with pytest.raises(ConfigError):
        as_int("three", "--n")
    with pytest.raises(ConfigError):
        as_float(None, "--ls")

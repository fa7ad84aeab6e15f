#!/usr/bin/env python3
"""
主动序列数据发布 - 命令行入口

子命令：gen-model / baseline / train / eval / sweep / oracle / reproduce
参数优先级：命令行 > --config 配置文件 > RELEASE_* 环境变量(.env) > config.constants.DEFAULTS
"""

import argparse
import json
import math
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from config.config import (
    as_float,
    as_int,
    parse_float_list,
    parse_str_list,
    resolve_config,
    write_config_value,
)
from config.constants import BASELINE_POLICIES, DEFAULTS, EXIT_GENERIC, EXIT_IO, EXIT_NUMERIC, EXIT_OK
from models.errors import ConfigError, ReleaseError
from models.observation_model import GeneratorSpec, ModelSpec, generate_gaussian_model, load_model, save_model
from tools.oracle_tools import exact_oracle
from tools.reward_tools import InfoEstimator, RewardKind
from agent_service.agent_a2c import TrainConfig, train, write_train_curve
from agent_service.evaluation import (
    compare_to_oracle,
    evaluate,
    reproduce_tradeoff,
    summarize_csv,
    sweep,
)
from agent_service.policies import (
    ActorHeadKind,
    RandomPolicy,
    RandomPolicySpec,
    baseline_policy,
    load_policy,
    save_policy,
)
from agent_service.release_env import EnvConfig

PACKAGE_VERSION = "0.1.0"


# ========== 参数解析 ==========

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON 配置文件，键名与 flag 一一对应")
    p.add_argument("--seed", type=int, help="随机种子")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="active-release",
        description="主动序列数据发布：信念 MDP 模拟、A2C 训练与 Monte Carlo 评估",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-model", help="生成高斯派生观测模型")
    _common(p)
    p.add_argument("--n", type=int, help="秘密假设数 N")
    p.add_argument("--m", type=int, help="有用假设数 M")
    p.add_argument("--actions", type=int, help="发布机制数 |A|")
    p.add_argument("--obs", type=int, help="观测取值数 |Z|")
    p.add_argument("--sigma-low", type=float)
    p.add_argument("--sigma-high", type=float)
    p.add_argument("--grid-low", type=float)
    p.add_argument("--grid-high", type=float)
    p.add_argument("--out", help="模型文件输出路径")

    p = sub.add_parser("baseline", help="把固定概率向量保存为随机基线策略")
    _common(p)
    p.add_argument("--probs", help="逗号分隔的动作概率，如 0.3,0.6,0.1")
    p.add_argument("--name", help="策略名")
    p.add_argument("--out", help="策略文件输出路径")

    p = sub.add_parser("train", help="A2C 训练")
    _common(p)
    p.add_argument("--model", help="模型文件")
    p.add_argument("--ls", type=float, help="秘密置信度阈值 L_s")
    p.add_argument("--reward", choices=[k.value for k in RewardKind])
    p.add_argument("--info-estimator", choices=[k.value for k in InfoEstimator])
    p.add_argument("--episodes", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--lr-actor", type=float)
    p.add_argument("--lr-critic", type=float)
    p.add_argument("--hidden", help="隐藏层宽度，如 64,64")
    p.add_argument("--head", choices=[k.value for k in ActorHeadKind])
    p.add_argument("--entropy-coeff", type=float)
    p.add_argument("--v-max", type=float)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--log-every", type=int)
    p.add_argument("--name", help="策略名")
    p.add_argument("--out", help="策略文件输出路径")
    p.add_argument("--log", help="训练曲线 CSV 路径")

    for name, help_text in (("eval", "评估单个策略"), ("oracle", "小实例穷举 oracle 与 Monte Carlo 对照")):
        p = sub.add_parser(name, help=help_text)
        _common(p)
        p.add_argument("--model", help="模型文件")
        p.add_argument("--policy", help="策略文件，或基线名 pi_R1 / pi_R2")
        p.add_argument("--probs", help="直接给出随机策略的动作概率")
        p.add_argument("--ls", type=float)
        p.add_argument("--episodes", type=int)
        p.add_argument("--max-steps", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--out", help="输出路径（eval: CSV, oracle: JSON）")
        if name == "oracle":
            p.add_argument("--horizon", type=int)

    p = sub.add_parser("sweep", help="策略 × 阈值扫描")
    _common(p)
    p.add_argument("--model", help="模型文件")
    p.add_argument("--policies", help="逗号分隔的策略文件或基线名")
    p.add_argument("--ls", help="逗号分隔的阈值列表")
    p.add_argument("--episodes", type=int)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="CSV 输出路径")

    p = sub.add_parser("reproduce", help="每个阈值训练 π_β 与 π_I 并与随机基线一起评估")
    _common(p)
    p.add_argument("--model", help="模型文件")
    p.add_argument("--ls", help="逗号分隔的阈值列表")
    p.add_argument("--episodes", type=int, help="每个策略的训练回合数")
    p.add_argument("--eval-episodes", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--lr-actor", type=float)
    p.add_argument("--lr-critic", type=float)
    p.add_argument("--hidden")
    p.add_argument("--head", choices=[k.value for k in ActorHeadKind])
    p.add_argument("--max-steps", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="CSV 输出路径")

    return parser


# ========== 公共工具 ==========

def _provenance(command: str, cfg: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "command": command,
        "config": cfg,
        "package_version": PACKAGE_VERSION,
        "created": datetime.now().isoformat(),
    }


def _record_run(provenance: Dict[str, Any]) -> None:
    write_config_value("LAST_RUN", provenance)


def _require(cfg: Dict[str, Any], key: str) -> Any:
    if cfg.get(key) in (None, ""):
        raise ConfigError(f"--{key.replace('_', '-')} is required")
    return cfg[key]


def _resolve(args: argparse.Namespace, keys: Sequence[str], fallbacks: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    return resolve_config(flags, keys, args.config, args.command, fallbacks)


def _load_policy_arg(cfg: Dict[str, Any]):
    """--probs 优先；--policy 可以是基线名或策略文件"""
    if cfg.get("probs") not in (None, ""):
        probs = parse_float_list(cfg["probs"], "--probs")
        return RandomPolicy(RandomPolicySpec(tuple(probs), name="random"))
    ref = _require(cfg, "policy")
    if ref in BASELINE_POLICIES:
        return baseline_policy(ref)
    return load_policy(ref)


def _check_actions(policy, model) -> None:
    spec = model.spec
    if isinstance(policy, RandomPolicy):
        n_actions = len(policy.spec.probs)
    else:
        sizes = policy.params.sizes
        if sizes[0] != spec.n_secret * spec.n_useful:
            raise ConfigError(f"policy {policy.name} expects {sizes[0]} belief entries, model has {spec.n_secret * spec.n_useful}")
        n_actions = sizes[-1]
    if n_actions != spec.n_actions:
        raise ConfigError(f"policy {policy.name} has {n_actions} actions, model has {spec.n_actions}")


def _enum(kind, value: Any, what: str):
    try:
        return kind(value)
    except ValueError as e:
        raise ConfigError(f"{what}: unknown value {value!r}") from e


def _print_report(report) -> None:
    print(f"📊 {report.policy} @ ls={report.ls}: "
          f"conf(U_true)={report.conf_true_u:.4f}±{report.conf_true_u_se:.4f}, "
          f"conf(max U)={report.conf_max_u:.4f}, MI={report.mi_nats:.4f} nats, "
          f"τ={report.tau_mean:.2f}±{report.tau_std:.2f}, 截断率={report.truncation_rate:.3f}")


def _hidden(value: Any) -> tuple:
    sizes = tuple(int(v) for v in parse_float_list(value, "--hidden"))
    if not sizes:
        raise ConfigError("--hidden needs at least one layer")
    return sizes


# ========== 子命令 ==========

def cmd_gen_model(args: argparse.Namespace) -> int:
    cfg = _resolve(args, ["n", "m", "actions", "obs", "sigma_low", "sigma_high", "grid_low", "grid_high", "seed", "out"])
    out = _require(cfg, "out")
    gen = GeneratorSpec(
        spec=ModelSpec(
            n_secret=as_int(cfg["n"], "--n"),
            n_useful=as_int(cfg["m"], "--m"),
            n_actions=as_int(cfg["actions"], "--actions"),
            n_obs=as_int(cfg["obs"], "--obs"),
        ),
        sigma_low=as_float(cfg["sigma_low"], "--sigma-low"),
        sigma_high=as_float(cfg["sigma_high"], "--sigma-high"),
        grid_low=as_float(cfg["grid_low"], "--grid-low"),
        grid_high=as_float(cfg["grid_high"], "--grid-high"),
        seed=as_int(cfg["seed"], "--seed"),
    )
    gen.validate()
    model = generate_gaussian_model(gen)
    provenance = _provenance("gen-model", cfg)
    save_model(model, out, provenance)
    _record_run(provenance)
    print(f"✅ 模型已生成: {out} (shape={list(model.spec.shape)}, seed={gen.seed})")
    return EXIT_OK


def cmd_baseline(args: argparse.Namespace) -> int:
    cfg = _resolve(args, ["probs", "name", "seed", "out"])
    probs = parse_float_list(_require(cfg, "probs"), "--probs")
    out = _require(cfg, "out")
    policy = RandomPolicy(RandomPolicySpec(tuple(probs), name=cfg.get("name") or "random"))
    provenance = _provenance("baseline", cfg)
    save_policy(policy, out, provenance)
    _record_run(provenance)
    print(f"✅ 基线策略已保存: {out} probs={list(policy.spec.probs)}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _resolve(args, [
        "model", "ls", "reward", "info_estimator", "episodes", "gamma", "lr_actor", "lr_critic",
        "hidden", "head", "entropy_coeff", "v_max", "max_steps", "log_every", "seed", "name", "out", "log",
    ])
    model = load_model(_require(cfg, "model"))
    out = _require(cfg, "out")
    seed = as_int(cfg["seed"], "--seed")
    reward_kind = _enum(RewardKind, cfg["reward"], "--reward")
    estimator = _enum(InfoEstimator, cfg["info_estimator"], "--info-estimator")
    head = _enum(ActorHeadKind, cfg["head"], "--head")

    env_cfg = EnvConfig(
        model=model,
        ls=as_float(cfg["ls"], "--ls"),
        reward_kind=reward_kind,
        max_steps=as_int(cfg["max_steps"], "--max-steps"),
        seed=seed,
        info_estimator=estimator,
    )
    train_cfg = TrainConfig(
        gamma=as_float(cfg["gamma"], "--gamma"),
        lr_actor=as_float(cfg["lr_actor"], "--lr-actor"),
        lr_critic=as_float(cfg["lr_critic"], "--lr-critic"),
        episodes=as_int(cfg["episodes"], "--episodes"),
        v_max=None if cfg["v_max"] in (None, "") else as_float(cfg["v_max"], "--v-max"),
        seed=seed,
        head=head,
        entropy_coeff=as_float(cfg["entropy_coeff"], "--entropy-coeff"),
        hidden=_hidden(cfg["hidden"]),
        log_every=as_int(cfg["log_every"], "--log-every"),
    )
    env_cfg.validate()
    train_cfg.validate()

    name = cfg.get("name") or ("pi_beta" if reward_kind is RewardKind.BELIEF else "pi_I")
    event_log = Path(out).with_suffix(".events.jsonl")
    result = train(env_cfg, train_cfg, signature=name, log_path=event_log)
    provenance = _provenance("train", cfg)
    save_policy(result.policy(name=name), out, provenance)
    if cfg.get("log"):
        write_train_curve(result.curve, cfg["log"], provenance)
    _record_run(provenance)
    print(f"✅ 策略已保存: {out}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _resolve(args, ["model", "policy", "probs", "ls", "episodes", "max_steps", "workers", "seed", "out"],
                   fallbacks={"episodes": DEFAULTS["eval_episodes"]})
    model = load_model(_require(cfg, "model"))
    policy = _load_policy_arg(cfg)
    _check_actions(policy, model)
    report = evaluate(
        model, policy,
        ls=as_float(cfg["ls"], "--ls"),
        episodes=as_int(cfg["episodes"], "--episodes"),
        seed=as_int(cfg["seed"], "--seed"),
        max_steps=as_int(cfg["max_steps"], "--max-steps"),
        workers=as_int(cfg["workers"], "--workers"),
    )
    _print_report(report)
    provenance = _provenance("eval", cfg)
    if cfg.get("out"):
        summarize_csv([report], cfg["out"], provenance)
    _record_run(provenance)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _resolve(args, ["model", "policies", "ls", "episodes", "max_steps", "workers", "seed", "out"],
                   fallbacks={"episodes": DEFAULTS["eval_episodes"], "ls": DEFAULTS["ls_list"]})
    model = load_model(_require(cfg, "model"))
    refs = parse_str_list(cfg.get("policies") or ",".join(BASELINE_POLICIES), "--policies")
    policies = [baseline_policy(r) if r in BASELINE_POLICIES else load_policy(r) for r in refs]
    for policy in policies:
        _check_actions(policy, model)
    ls_list = parse_float_list(cfg["ls"], "--ls")
    reports = sweep(
        model, policies, ls_list,
        episodes=as_int(cfg["episodes"], "--episodes"),
        seed=as_int(cfg["seed"], "--seed"),
        max_steps=as_int(cfg["max_steps"], "--max-steps"),
        workers=as_int(cfg["workers"], "--workers"),
    )
    for report in reports:
        _print_report(report)
    provenance = _provenance("sweep", cfg)
    summarize_csv(reports, _require(cfg, "out"), provenance)
    _record_run(provenance)
    print(f"✅ 扫描完成: {len(reports)} 行 → {cfg['out']}")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    cfg = _resolve(args, ["model", "policy", "probs", "ls", "horizon", "episodes", "workers", "seed", "out"],
                   fallbacks={"episodes": DEFAULTS["oracle_episodes"]})
    model = load_model(_require(cfg, "model"))
    policy = _load_policy_arg(cfg)
    _check_actions(policy, model)
    ls = as_float(cfg["ls"], "--ls")
    horizon = as_int(cfg["horizon"], "--horizon")
    if horizon < 1:
        raise ConfigError(f"--horizon must be ≥ 1 to compare against Monte Carlo episodes, got {horizon}")
    seed = as_int(cfg["seed"], "--seed")

    oracle = exact_oracle(model, policy, ls, horizon)
    report = evaluate(model, policy, ls, as_int(cfg["episodes"], "--episodes"), seed,
                      max_steps=horizon, workers=as_int(cfg["workers"], "--workers"))
    comparisons = compare_to_oracle(report, oracle)
    for c in comparisons:
        mark = "✅" if c.ok else "❌"
        print(f"{mark} {c.metric}: MC={c.monte_carlo:.6f} exact={c.exact:.6f} (SE={c.standard_error:.6f})")
    verdict = all(c.ok for c in comparisons)

    provenance = _provenance("oracle", cfg)
    if cfg.get("out"):
        doc = {
            "oracle": {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in vars(oracle).items()},
            "comparison": [vars(c) for c in comparisons],
            "verdict": "agree" if verdict else "disagree",
            "provenance": provenance,
        }
        Path(cfg["out"]).parent.mkdir(parents=True, exist_ok=True)
        with open(cfg["out"], "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=2)
    _record_run(provenance)
    print(f"{'✅' if verdict else '❌'} oracle 对照: {'一致' if verdict else '不一致'}")
    return EXIT_OK if verdict else EXIT_NUMERIC


def cmd_reproduce(args: argparse.Namespace) -> int:
    cfg = _resolve(args, [
        "model", "ls", "episodes", "eval_episodes", "gamma", "lr_actor", "lr_critic", "hidden", "head",
        "max_steps", "workers", "seed", "out", "log_every",
    ], fallbacks={"ls": DEFAULTS["ls_list"]})
    model = load_model(_require(cfg, "model"))
    out = _require(cfg, "out")
    train_cfg = TrainConfig(
        gamma=as_float(cfg["gamma"], "--gamma"),
        lr_actor=as_float(cfg["lr_actor"], "--lr-actor"),
        lr_critic=as_float(cfg["lr_critic"], "--lr-critic"),
        episodes=as_int(cfg["episodes"], "--episodes"),
        head=_enum(ActorHeadKind, cfg["head"], "--head"),
        hidden=_hidden(cfg["hidden"]),
        log_every=as_int(cfg["log_every"], "--log-every"),
    )
    train_cfg.validate()
    reports = reproduce_tradeoff(
        model,
        parse_float_list(cfg["ls"], "--ls"),
        train_cfg,
        eval_episodes=as_int(cfg["eval_episodes"], "--eval-episodes"),
        seed=as_int(cfg["seed"], "--seed"),
        max_steps=as_int(cfg["max_steps"], "--max-steps"),
        workers=as_int(cfg["workers"], "--workers"),
        verbose=True,
    )
    provenance = _provenance("reproduce", cfg)
    summarize_csv(reports, out, provenance)
    _record_run(provenance)
    print(f"✅ 权衡曲线数据已写入: {out}")
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "gen-model": cmd_gen_model,
    "baseline": cmd_baseline,
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
    "reproduce": cmd_reproduce,
}


def main(argv: Optional[List[str]] = None) -> int:
    """入口：返回退出码，配置/数值/I-O 错误分别映射为不同的非零码"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse 已打印 usage；未知参数与子命令按配置错误处理
        return int(e.code) if e.code is not None else EXIT_OK

    try:
        return COMMANDS[args.command](args)
    except ReleaseError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"❌ I/O 错误: {e}", file=sys.stderr)
        return EXIT_IO
    except FloatingPointError as e:
        print(f"❌ 数值错误: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except Exception as e:
        print(f"💥 未预期的错误 {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_GENERIC


if __name__ == "__main__":
    sys.exit(main())

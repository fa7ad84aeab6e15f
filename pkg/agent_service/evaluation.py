"""
Monte Carlo 评估

冻结策略下批量跑回合，估计对手在决策时刻对 U 的置信度、释放数据与 U 的互信息、决策时间统计；
支持阈值扫描、与穷举 oracle 对照，以及隐私-效用权衡实验的完整复现。
"""

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from config.constants import DEFAULTS
from models.errors import ConfigError
from models.observation_model import ObservationModel
from tools.belief_tools import marginal_useful
from tools.oracle_tools import OracleResult
from tools.reward_tools import RewardKind
from agent_service.agent_a2c import TrainConfig, train
from agent_service.policies import Policy, baseline_policy
from agent_service.release_env import EnvConfig, run_episode
from agent_service.utils import check_csv_format, data_lines, fmt9, write_csv_header

SUMMARY_COLUMNS = [
    "policy", "ls", "conf_true_u", "conf_max_u", "mi_nats",
    "tau_mean", "tau_std", "truncation_rate", "episodes", "seed",
]


@dataclass(frozen=True)
class EvalReport:
    policy: str
    ls: float
    conf_true_u: float       # E[β_τ(U_true)]
    conf_max_u: float        # E[max_u β_τ(u)]
    mi_nats: float           # I(U; Z^T, A^T) 估计
    tau_mean: float          # 仅统计终止回合
    tau_std: float
    episodes: int
    truncation_rate: float
    seed: int
    conf_true_u_se: float = 0.0
    conf_max_u_se: float = 0.0
    mi_se: float = 0.0
    tau_se: float = 0.0
    n_terminated: int = 0
    max_steps: int = DEFAULTS["max_steps"]


@dataclass(frozen=True)
class _EpisodeSample:
    index: int
    conf_true: float
    conf_max: float
    info: float
    tau: Optional[int]


def _mean_std_se(values: Sequence[float]) -> Tuple[float, float, float]:
    n = len(values)
    if n == 0:
        return float("nan"), 0.0, 0.0
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    std = math.sqrt(var)
    return mean, std, std / math.sqrt(n)


def _run_chunk(cfg: EnvConfig, policy: Policy, indices: Sequence[int]) -> List[_EpisodeSample]:
    out = []
    for idx in indices:
        log = run_episode(cfg, policy, idx)
        beta_u = marginal_useful(log.terminal_belief)
        out.append(_EpisodeSample(
            index=idx,
            conf_true=float(beta_u[log.true_useful]),
            conf_max=float(beta_u.max()),
            info=log.info_total,
            tau=None if log.truncated else log.decision_time,
        ))
    return out


def evaluate(
    model: ObservationModel,
    policy: Policy,
    ls: float,
    episodes: int,
    seed: int,
    max_steps: int = DEFAULTS["max_steps"],
    workers: int = 1,
) -> EvalReport:
    """
    冻结策略下跑 episodes 个回合并汇总

    回合 i 使用由 (seed, i) 派生的独立随机流，多线程下结果与单线程逐位一致。
    """
    if episodes < 1:
        raise ConfigError(f"episodes must be ≥ 1, got {episodes}")
    cfg = EnvConfig(model=model, ls=ls, reward_kind=RewardKind.BELIEF, max_steps=max_steps, seed=seed)
    cfg.validate()

    indices = list(range(episodes))
    if workers <= 1:
        samples = _run_chunk(cfg, policy, indices)
    else:
        chunks = [indices[i::workers] for i in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _run_chunk(cfg, policy, c), chunks))
        samples = sorted((s for part in parts for s in part), key=lambda s: s.index)

    conf_true, _, conf_true_se = _mean_std_se([s.conf_true for s in samples])
    conf_max, _, conf_max_se = _mean_std_se([s.conf_max for s in samples])
    mi, _, mi_se = _mean_std_se([s.info for s in samples])
    taus = [float(s.tau) for s in samples if s.tau is not None]
    tau_mean, tau_std, tau_se = _mean_std_se(taus)

    return EvalReport(
        policy=getattr(policy, "name", "policy"),
        ls=float(ls),
        conf_true_u=conf_true,
        conf_max_u=conf_max,
        mi_nats=mi,
        tau_mean=tau_mean,
        tau_std=tau_std,
        episodes=episodes,
        truncation_rate=(episodes - len(taus)) / episodes,
        seed=seed,
        conf_true_u_se=conf_true_se,
        conf_max_u_se=conf_max_se,
        mi_se=mi_se,
        tau_se=tau_se,
        n_terminated=len(taus),
        max_steps=max_steps,
    )


def sweep(
    model: ObservationModel,
    policies: Sequence[Policy],
    ls_list: Sequence[float],
    episodes: int,
    seed: int,
    max_steps: int = DEFAULTS["max_steps"],
    workers: int = 1,
    verbose: bool = False,
) -> List[EvalReport]:
    """策略 × 阈值 的全组合，每个组合一条报告"""
    if not policies or not ls_list:
        raise ConfigError("sweep needs at least one policy and one threshold")
    reports = []
    for policy in policies:
        for ls in ls_list:
            report = evaluate(model, policy, ls, episodes, seed, max_steps, workers)
            if verbose:
                print(f"📊 {report.policy} @ ls={ls}: conf(U)={report.conf_true_u:.4f}, "
                      f"MI={report.mi_nats:.4f}, τ={report.tau_mean:.2f}±{report.tau_std:.2f}")
            reports.append(report)
    return reports


def summarize_csv(
    reports: Sequence[EvalReport],
    path: Union[str, Path],
    provenance: Optional[Dict[str, Any]] = None,
) -> None:
    """每条报告一行，数值保留 9 位有效数字；头部为格式版本与可选的 provenance 注释"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        write_csv_header(f, provenance)
        writer = csv.writer(f)
        writer.writerow(SUMMARY_COLUMNS)
        for r in reports:
            writer.writerow([
                r.policy, fmt9(r.ls), fmt9(r.conf_true_u), fmt9(r.conf_max_u), fmt9(r.mi_nats),
                fmt9(r.tau_mean), fmt9(r.tau_std), fmt9(r.truncation_rate), r.episodes, r.seed,
            ])


def read_summary_csv(path: Union[str, Path]) -> List[Dict[str, str]]:
    """读回 summarize_csv 的输出；格式版本不符时报错"""
    check_csv_format(path)
    with open(path, "r", newline="", encoding="utf-8") as f:
        return list(csv.DictReader(data_lines(f)))


@dataclass(frozen=True)
class OracleComparison:
    metric: str
    monte_carlo: float
    exact: float
    standard_error: float
    ok: bool


def compare_to_oracle(report: EvalReport, oracle: OracleResult, k: float = 3.0) -> List[OracleComparison]:
    """Monte Carlo 估计与精确值逐项比较，容差为 k 个标准误"""
    pairs = [
        ("conf_true_u", report.conf_true_u, oracle.expected_terminal_confidence, report.conf_true_u_se),
        ("conf_max_u", report.conf_max_u, oracle.expected_max_confidence, report.conf_max_u_se),
        ("mi_nats", report.mi_nats, oracle.exact_joint_mi, report.mi_se),
    ]
    if report.n_terminated > 0 and not math.isnan(oracle.expected_tau):
        pairs.append(("tau_mean", report.tau_mean, oracle.expected_tau, report.tau_se))
    return [
        OracleComparison(name, mc, exact, se, abs(mc - exact) <= k * se + 1e-12)
        for name, mc, exact, se in pairs
    ]


def reproduce_tradeoff(
    model: ObservationModel,
    ls_list: Sequence[float],
    train_cfg: TrainConfig,
    eval_episodes: int,
    seed: int,
    max_steps: int = DEFAULTS["max_steps"],
    workers: int = 1,
    verbose: bool = False,
) -> List[EvalReport]:
    """
    隐私-效用权衡实验

    每个阈值分别训练信念奖励策略 π_β 与信息奖励策略 π_I，连同两个随机基线一起评估。
    训练回合用 seed 派生的随机流，评估用 seed+1，两者不重叠。
    """
    reports: List[EvalReport] = []
    baselines = [baseline_policy(name) for name in ("pi_R1", "pi_R2")]
    n_actions = model.spec.n_actions
    if any(len(p.spec.probs) != n_actions for p in baselines):
        if verbose:
            print(f"⚠️ 随机基线只定义在 3 个动作上，模型有 {n_actions} 个，跳过基线")
        baselines = []
    for ls in ls_list:
        for kind, name in ((RewardKind.BELIEF, "pi_beta"), (RewardKind.INFO, "pi_I")):
            env_cfg = EnvConfig(model=model, ls=ls, reward_kind=kind, max_steps=max_steps, seed=seed)
            result = train(env_cfg, replace(train_cfg, seed=seed), signature=f"{name}_ls{ls}")
            policy = result.policy(name=name)
            reports.append(evaluate(model, policy, ls, eval_episodes, seed + 1, max_steps, workers))
        for policy in baselines:
            reports.append(evaluate(model, policy, ls, eval_episodes, seed + 1, max_steps, workers))
        if verbose:
            for r in reports[-(2 + len(baselines)):]:
                print(f"📊 ls={ls} {r.policy}: conf(U)={r.conf_true_u:.4f}, MI={r.mi_nats:.4f}, τ={r.tau_mean:.1f}")
    return reports

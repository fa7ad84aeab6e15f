"""
穷举 oracle

在小实例上枚举所有 (a,z) 路径直到终止或到达 horizon，用精确路径概率给出
终止置信度、联合互信息 I(U; Z^T, A^T) 与决策时间的精确期望，作为 Monte Carlo 评估的参照。
"""

import math
from dataclasses import dataclass
from typing import Any, List

import numpy as np

from config.constants import ORACLE_BUDGET
from models.errors import BudgetExceededError, ConfigError
from models.observation_model import ObservationModel
from tools.belief_tools import Belief, bayes_update, is_final, marginal_useful
from tools.reward_tools import per_step_mi


@dataclass(frozen=True)
class OracleResult:
    expected_terminal_confidence: float   # E[β_τ(U_true)]
    expected_max_confidence: float        # E[max_u β_τ(u)]
    exact_joint_mi: float                 # I(U; Z^T, A^T)，由叶子的后验直接算出
    chain_rule_mi: float                  # Σ 节点 P(节点)·per_step_mi
    expected_tau: float                   # 以终止为条件；从不终止时为 nan
    termination_probability: float
    n_leaves: int


def enumeration_cost(model: ObservationModel, horizon: int) -> int:
    spec = model.spec
    return (spec.n_actions * spec.n_obs) ** horizon * spec.n_secret * spec.n_useful


def exact_oracle(
    model: ObservationModel,
    policy: Any,
    ls: float,
    horizon: int,
    budget: int = ORACLE_BUDGET,
) -> OracleResult:
    """
    精确枚举

    policy 只需提供 act(belief) -> ActionDistribution，在每条路径的信念上精确求值（不采样）。
    到达 horizon 而未终止的路径以当时的信念计入置信度，不计入 τ。

    Raises:
        BudgetExceededError: (|A|·|Z|)^horizon·N·M 超出预算
    """
    if horizon < 0:
        raise ConfigError(f"horizon must be ≥ 0, got {horizon}")
    if not 0.0 < ls <= 1.0:
        raise ConfigError(f"ls must lie in (0, 1], got {ls}")
    cost = enumeration_cost(model, horizon)
    if cost > budget:
        raise BudgetExceededError(f"enumeration needs {cost} evaluations, budget is {budget}")

    prior_u = marginal_useful(Belief.from_prior(model))
    conf_true: List[float] = []
    conf_max: List[float] = []
    joint_mi: List[float] = []
    chain_mi: List[float] = []
    term_prob: List[float] = []
    term_tau: List[float] = []
    n_leaves = 0

    stack = [(Belief.from_prior(model), 1.0, 0)]
    while stack:
        belief, prob, depth = stack.pop()
        terminated = is_final(belief, ls)
        if terminated or depth >= horizon:
            n_leaves += 1
            beta_u = marginal_useful(belief)
            conf_true.append(prob * float(np.dot(beta_u, beta_u)))
            conf_max.append(prob * float(beta_u.max()))
            support = beta_u > 0
            joint_mi.append(prob * float(np.sum(beta_u[support] * np.log(beta_u[support] / prior_u[support]))))
            if terminated:
                term_prob.append(prob)
                term_tau.append(prob * depth)
            continue

        pi = policy.act(belief).probs
        chain_mi.append(prob * per_step_mi(belief, pi, model))
        for a in range(model.spec.n_actions):
            if pi[a] <= 0:
                continue
            evidence = np.einsum("suz,su->z", model.q[a], belief.p)
            for z in range(model.spec.n_obs):
                if evidence[z] <= 0:
                    continue
                child = bayes_update(belief, a, z, model)
                stack.append((child, prob * pi[a] * evidence[z], depth + 1))

    p_term = math.fsum(term_prob)
    return OracleResult(
        expected_terminal_confidence=math.fsum(conf_true),
        expected_max_confidence=math.fsum(conf_max),
        exact_joint_mi=max(math.fsum(joint_mi), 0.0),
        chain_rule_mi=math.fsum(chain_mi),
        expected_tau=math.fsum(term_tau) / p_term if p_term > 0 else float("nan"),
        termination_probability=p_term,
        n_leaves=n_leaves,
    )

"""
全局常量定义

所有可配置参数的默认值只在 DEFAULTS 表中出现一次，CLI、配置文件、环境变量都回落到这里。
"""

# ========== 文件格式版本 ==========
MODEL_FORMAT_VERSION = 1
POLICY_FORMAT_VERSION = 1
CSV_FORMAT_VERSION = 1

# ========== 数值容差 ==========
ROW_SUM_TOL = 1e-12        # q(z|a,s,u) 行和、先验和
BELIEF_SUM_TOL = 1e-10     # 信念归一化
DRIFT_WARN_TOL = 1e-6      # 重新归一化前的漂移诊断阈值
LOG_FLOOR = 1e-12          # 仅在 log 内部使用的概率下限

# ========== ADAM 常数 ==========
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# ========== 穷举 oracle 预算 ==========
ORACLE_BUDGET = 10**7

# ========== 退出码 ==========
EXIT_OK = 0
EXIT_GENERIC = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

# ========== 默认参数表（唯一来源） ==========
# 键名与 CLI 参数一一对应（下划线形式）
DEFAULTS = {
    # 模型生成
    "n": 3,
    "m": 3,
    "actions": 3,
    "obs": 21,
    "sigma_low": 0.5,
    "sigma_high": 1.5,
    "grid_low": -3.0,
    "grid_high": 6.0,
    # 通用
    "seed": 0,
    "ls": 0.8,
    "max_steps": 5000,
    "reward": "belief",
    "info_estimator": "kl",
    # 训练
    "episodes": 20000,
    "gamma": 0.999,
    "lr_actor": 1e-3,
    "lr_critic": 1e-3,
    "hidden": "64,64",
    "head": "softmax",
    "entropy_coeff": 0.0,
    "v_max": None,          # None → max(1, ln M)
    "log_every": 1000,
    # 评估
    "eval_episodes": 10000,
    "workers": 1,
    "ls_list": "0.65,0.8,0.9,0.95",
    # oracle
    "horizon": 4,
    "oracle_episodes": 100000,
}

# 内置随机基线策略
BASELINE_POLICIES = {
    "pi_R1": [0.3, 0.6, 0.1],
    "pi_R2": [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
}

# -*- coding: utf-8 -*-
"""
应用常量定义文件
"""

# 应用基本信息
APP_NAME = "modular-reacher"
APP_VERSION = "1.0.0"

# 任务常量
ACTION_DELTA = 0.04  # 每步关节增量（弧度）
NUM_JOINTS = 3
NUM_ACTIONS = 9
THETA_DIM = 5
IMAGE_SIZE = 84
PX_PER_M = 42.0
PX_PER_CM = 0.42
REACH_THRESHOLD = 0.05  # 奖励判定距离（米）
EPISODE_HORIZON = 100

# 图像域
DOMAIN_SIM = "sim"
DOMAIN_PSEUDO_REAL = "pseudo-real"
DOMAIN_CODES = {DOMAIN_SIM: 0, DOMAIN_PSEUDO_REAL: 1}

# 评估对象
VARIANT_INITIAL = "initial"
VARIANT_FINETUNED = "finetuned"
VARIANT_CR = "cr"
VARIANT_ORDER = (VARIANT_INITIAL, VARIANT_FINETUNED, VARIANT_CR)
VARIANT_LABELS = {
    VARIANT_INITIAL: "Initial",
    VARIANT_FINETUNED: "Fine-tuned",
    VARIANT_CR: "CR",
}

# 退出码
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGENCE = 3
EXIT_TRIAL_FAILURE = 4

# 错误消息
ERROR_CHECKPOINT_NOT_FOUND = "{stage} checkpoint not found"
ERROR_DATASET_NOT_FOUND = "dataset not found"
ERROR_OUTPUT_EXISTS = "输出文件已存在，使用 --force 覆盖"

# 日志消息
LOG_STAGE_DONE = "阶段完成"

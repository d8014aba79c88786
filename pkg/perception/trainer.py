# -*- coding: utf-8 -*-
"""
感知训练模块
混合域小批次 + L_p + SGD，学习率从 0.01 线性衰减到 0.001
"""

import logging
from dataclasses import dataclass, asdict

import numpy as np

from constants import DOMAIN_PSEUDO_REAL, DOMAIN_SIM
from network import LinearSchedule
from perception.model import (PerceptionBatch, build_perception_net, make_mixed_batch, perception_loss,
                              perception_loss_value)
from utils.common_utils import write_csv
from utils.decorators import performance_monitor
from utils.errors import DivergenceError, UsageError

logger = logging.getLogger(__name__)

CURVE_FIELDS = ["step", "loss", "lr", "val_loss"]


@dataclass
class PerceptionTrainConfig:
    """感知训练配置"""
    lr_start: float = 0.01
    lr_end: float = 0.001
    batch_size: int = 256
    real_fraction: float = 0.75
    steps: int = 2000
    validation_fraction: float = 0.1
    log_interval: int = 100
    seed: int = 0

    def validate(self):
        errors = []
        if self.lr_start <= 0 or self.lr_end <= 0:
            errors.append("学习率必须为正")
        if self.batch_size < 1:
            errors.append("batch_size 必须 ≥ 1")
        if not 0.0 <= self.real_fraction <= 1.0:
            errors.append("real_fraction 必须在 [0,1] 内")
        if self.steps < 0:
            errors.append("steps 不能为负")
        if not 0.0 <= self.validation_fraction < 1.0:
            errors.append("validation_fraction 必须在 [0,1) 内")
        if self.log_interval < 1:
            errors.append("log_interval 必须 ≥ 1")
        return errors

    def schedule(self):
        return LinearSchedule(self.lr_start, self.lr_end, self.steps)

    def to_dict(self):
        return asdict(self)


def validation_batch(dataset, limit=256):
    """取验证集前 limit 条组成固定批次"""
    n = min(len(dataset), limit)
    if n == 0:
        return None
    domains = dataset.domains[:n]
    composition = {DOMAIN_SIM: int(np.count_nonzero(domains == 0)),
                   DOMAIN_PSEUDO_REAL: int(np.count_nonzero(domains == 1))}
    return PerceptionBatch(dataset.frames[:n], dataset.thetas[:n], composition)


@performance_monitor
def train_perception(dataset, config, net=None, validation=None, curve_path=None):
    """
    训练感知网络

    Args:
        dataset (Dataset): 训练集（需包含两个域）
        config (PerceptionTrainConfig): 配置
        net (Network): 初始网络；为 None 时按 config.seed 初始化
        validation (Dataset): 验证集，用于记录 val_loss
        curve_path (str): 训练曲线 CSV 路径 (step, loss, lr, val_loss)

    Returns:
        tuple: (训练后的网络, 训练曲线行列表)
    """
    problems = config.validate()
    if problems:
        raise UsageError("; ".join(problems))
    if net is None:
        net = build_perception_net(config.seed, dataset.frames.shape[1] if len(dataset) else 84)
    rng = np.random.default_rng(config.seed)
    schedule = config.schedule()
    val_batch = validation_batch(validation) if validation is not None else None
    curve, last_loss = [], None
    for step in range(config.steps):
        batch = make_mixed_batch(dataset, config.batch_size, config.real_fraction, rng)
        loss, grads = perception_loss(net, batch)
        if not np.isfinite(loss) or not grads.is_finite():
            raise DivergenceError("perception", step, last_loss)
        lr = schedule(step)
        net.apply_gradients(grads, lr)
        last_loss = loss
        if step % config.log_interval == 0 or step == config.steps - 1:
            row = {"step": step, "loss": loss, "lr": lr, "val_loss": None}
            if val_batch is not None:
                row["val_loss"] = perception_loss_value(net, val_batch)
            curve.append(row)
            logger.info(f"感知训练 step={step} L_p={loss:.6f} lr={lr:.5f} val={row['val_loss']}")
    if curve_path:
        write_csv(curve_path, curve, CURVE_FIELDS)
    return net, curve

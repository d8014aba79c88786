# -*- coding: utf-8 -*-
"""
优化模块
朴素 SGD 更新与线性衰减学习率
"""

from dataclasses import dataclass

from network.params import ParamSet
from utils.errors import NumericalError, UsageError


def sgd_step(params, grads, lr):
    """
    params' = params - lr * grads，逐元素

    Args:
        params (ParamSet): 当前参数
        grads (GradSet): 梯度
        lr (float): 学习率，必须为正

    Returns:
        ParamSet: 新参数（不修改输入）
    """
    if not lr > 0:
        raise UsageError(f"学习率必须为正: {lr}")
    if not params.compatible_with(grads):
        raise UsageError("参数与梯度形状不一致")
    if not grads.is_finite():
        raise NumericalError("梯度含非有限值，拒绝更新")
    weights = [w - (lr * g).astype(w.dtype, copy=False) for w, g in zip(params.weights, grads.weights)]
    biases = [b - (lr * g).astype(b.dtype, copy=False) for b, g in zip(params.biases, grads.biases)]
    updated = ParamSet(weights, biases)
    if not updated.is_finite():
        raise NumericalError("更新后的参数含非有限值")
    return updated


@dataclass(frozen=True)
class LinearSchedule:
    """从 start 线性衰减到 end，steps 步后保持 end"""
    start: float = 0.01
    end: float = 0.001
    steps: int = 1

    def __call__(self, step):
        if self.steps <= 1:
            return self.end if step > 0 else self.start
        fraction = min(max(step / (self.steps - 1), 0.0), 1.0)
        return self.start + (self.end - self.start) * fraction

# -*- coding: utf-8 -*-
"""
组合策略模块
感知网络输出 Θ̂ 直接作为控制网络输入（5 维瓶颈）
"""

from dataclasses import dataclass

import numpy as np

from constants import THETA_DIM
from control.qnet import CONTROL_NAME, greedy_action, q_values
from perception.model import PERCEPTION_NAME, perceive, perceive_batch
from utils.errors import NetworkConfigError
from vision.camera import DEFAULT_CAMERA
from vision.renderer import render


@dataclass
class CombinedPolicy:
    """感知 + 控制"""
    perception: object
    control: object

    def __post_init__(self):
        if self.perception.output_shape != (THETA_DIM,):
            raise NetworkConfigError(f"感知网络输出必须为 {THETA_DIM} 维", len(self.perception.specs) - 1)
        if self.control.input_shape != (THETA_DIM,):
            raise NetworkConfigError(f"控制网络输入必须为 {THETA_DIM} 维", 0)

    def copy(self):
        return CombinedPolicy(self.perception.copy(), self.control.copy())

    def networks(self):
        """用于检查点的 {名称: 网络}"""
        return {PERCEPTION_NAME: self.perception, CONTROL_NAME: self.control}

    @classmethod
    def from_networks(cls, networks):
        return cls(networks[PERCEPTION_NAME], networks[CONTROL_NAME])


def combined_q(policy, frame):
    """图像 -> 9 个 Q 值"""
    return q_values(policy.control, perceive(policy.perception, frame))


def combined_policy(policy, camera=DEFAULT_CAMERA):
    """
    供评估使用的贪心策略：渲染当前状态，经感知与控制网络选动作

    Args:
        policy (CombinedPolicy): 组合策略
        camera (Camera): 渲染相机

    Returns:
        callable: 状态 -> ReachAction
    """
    def act(state):
        return greedy_action(combined_q(policy, render(state, camera)))
    return act


def bottleneck_error(policy, frames, thetas):
    """组合网络在瓶颈处的平均绝对误差（无帧时为 NaN）"""
    if len(frames) == 0:
        return float("nan")
    return float(np.mean(np.abs(perceive_batch(policy.perception, frames) - thetas)))

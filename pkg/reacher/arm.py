# -*- coding: utf-8 -*-
"""
平面三自由度机械臂模块
运动学、9 动作离散动力学、奖励、任务采样与运动学引导动作
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from constants import ACTION_DELTA, NUM_ACTIONS, NUM_JOINTS, REACH_THRESHOLD
from utils.errors import ProtocolError, SamplingError, UsageError

logger = logging.getLogger(__name__)

MAX_SAMPLING_DRAWS = 10000
MIN_INITIAL_DISTANCE = 0.1
# 视野范围 (x_min, x_max, y_min, y_max)，单位米，机械臂基座位于中心
DEFAULT_VIEWPORT = (-1.0, 1.0, -1.0, 1.0)


@dataclass(frozen=True)
class ArmModel:
    """机械臂几何：连杆长度（米）、关节限位（弧度）与动作步长"""
    link_lengths: tuple = (0.37, 0.37, 0.23)
    joint_limits: tuple = ((-2.8, 2.8), (-2.8, 2.8), (-2.8, 2.8))
    action_delta: float = ACTION_DELTA

    def __post_init__(self):
        if len(self.link_lengths) != NUM_JOINTS or len(self.joint_limits) != NUM_JOINTS:
            raise UsageError(f"机械臂必须有 {NUM_JOINTS} 个关节")
        if any(length <= 0 for length in self.link_lengths):
            raise UsageError("连杆长度必须为正")
        if any(lo >= hi for lo, hi in self.joint_limits):
            raise UsageError("关节限位必须满足 lo < hi")
        if self.action_delta <= 0:
            raise UsageError("动作步长必须为正")

    @property
    def reach(self):
        return sum(self.link_lengths)

    @property
    def inner_radius(self):
        """可达环形区域的内半径"""
        longest = max(self.link_lengths)
        return max(0.0, longest - (self.reach - longest))

    def clamp(self, q):
        return tuple(min(max(angle, lo), hi) for angle, (lo, hi) in zip(q, self.joint_limits))

    @classmethod
    def from_dict(cls, data):
        return cls(link_lengths=tuple(data["link_lengths"]),
                   joint_limits=tuple(tuple(pair) for pair in data["joint_limits"]),
                   action_delta=data.get("action_delta", ACTION_DELTA))

    def to_dict(self):
        return {"link_lengths": list(self.link_lengths),
                "joint_limits": [list(pair) for pair in self.joint_limits],
                "action_delta": self.action_delta}


DEFAULT_ARM = ArmModel()


def joint_positions(q, link_lengths=DEFAULT_ARM.link_lengths):
    """返回基座、两个中间关节与末端共 4 个点"""
    points = [(0.0, 0.0)]
    x = y = cumulative = 0.0
    for angle, length in zip(q, link_lengths):
        cumulative += angle
        x += length * math.cos(cumulative)
        y += length * math.sin(cumulative)
        points.append((x, y))
    return points


def forward_kinematics(q, link_lengths=DEFAULT_ARM.link_lengths):
    """
    末端位置 x = Σ L_i (cos c_i, sin c_i)，c_i 为累积关节角

    Args:
        q: 3 个关节角（弧度）
        link_lengths: 连杆长度

    Returns:
        tuple: 末端位置 (x, y)，单位米
    """
    return joint_positions(q, link_lengths)[-1]


@dataclass(frozen=True)
class SceneState:
    """一个任务实例的真值：关节角 q、目标 x*；末端位置 x 由 q 实时计算"""
    q: tuple
    target: tuple
    arm: ArmModel = field(default=DEFAULT_ARM, compare=False, repr=False)

    @property
    def effector(self):
        return forward_kinematics(self.q, self.arm.link_lengths)

    @property
    def distance(self):
        ex, ey = self.effector
        return math.hypot(ex - self.target[0], ey - self.target[1])


@dataclass(frozen=True)
class ReachAction:
    """离散动作：关节编号与增量，规范编号 id = 3 * joint + encode(delta)"""
    joint: int
    direction: int  # +1、-1 或 0

    @property
    def id(self):
        return 3 * self.joint + _DIRECTION_CODES[self.direction]

    def delta(self, arm=DEFAULT_ARM):
        return self.direction * arm.action_delta

    @property
    def is_noop(self):
        return self.direction == 0

    @staticmethod
    def from_id(action_id):
        if isinstance(action_id, bool) or not isinstance(action_id, int) or not 0 <= action_id < NUM_ACTIONS:
            raise ProtocolError(f"非法动作编号: {action_id!r}")
        return ALL_ACTIONS[action_id]


_DIRECTION_CODES = {+1: 0, -1: 1, 0: 2}
ALL_ACTIONS = tuple(ReachAction(joint, direction)
                    for joint in range(NUM_JOINTS) for direction in (+1, -1, 0))


def coerce_action(action):
    """把策略输出（ReachAction 或整数编号）规范化为 ReachAction"""
    if isinstance(action, ReachAction):
        if action not in ALL_ACTIONS:
            raise ProtocolError(f"非法动作: {action!r}")
        return action
    if isinstance(action, np.integer):
        action = int(action)
    return ReachAction.from_id(action)


@dataclass(frozen=True)
class Transition:
    """(状态, 动作, 奖励, 下一状态, 终止标志)"""
    state_before: SceneState
    action: ReachAction
    reward: float
    state_after: SceneState
    terminal: bool


def apply_action(state, action):
    """关节增量后按限位截断，目标不变"""
    if action.is_noop:
        return state
    q = list(state.q)
    q[action.joint] += action.delta(state.arm)
    return replace(state, q=state.arm.clamp(q))


def reward(state):
    """末端与目标距离小于 0.05 米时奖励为 1，否则为 0"""
    return 1.0 if state.distance < REACH_THRESHOLD else 0.0


def sample_task(rng, arm=DEFAULT_ARM, viewport=DEFAULT_VIEWPORT):
    """
    采样任务：关节角在限位内均匀分布；目标在可达环形区域与视野交集内
    均匀分布（拒绝采样）；初始距离不小于 0.1 米

    Args:
        rng (numpy.random.Generator): 已设定种子的随机数生成器
        arm (ArmModel): 机械臂几何
        viewport (tuple): (x_min, x_max, y_min, y_max)

    Returns:
        SceneState: 任务初始状态
    """
    x_min, x_max, y_min, y_max = viewport
    x_lo, x_hi = max(x_min, -arm.reach), min(x_max, arm.reach)
    y_lo, y_hi = max(y_min, -arm.reach), min(y_max, arm.reach)
    if x_lo >= x_hi or y_lo >= y_hi:
        raise SamplingError("视野与可达区域不相交")
    for _ in range(MAX_SAMPLING_DRAWS):
        q = tuple(float(rng.uniform(lo, hi)) for lo, hi in arm.joint_limits)
        target = (float(rng.uniform(x_lo, x_hi)), float(rng.uniform(y_lo, y_hi)))
        radius = math.hypot(*target)
        if not arm.inner_radius <= radius <= arm.reach:
            continue
        state = SceneState(q, target, arm)
        if state.distance >= MIN_INITIAL_DISTANCE:
            return state
    raise SamplingError(f"拒绝采样 {MAX_SAMPLING_DRAWS} 次仍未得到合法任务，请检查工作空间配置")


def guided_action(state):
    """一步前瞻：使下一步末端距离最小的动作，并列时取最小编号"""
    best, best_distance = None, math.inf
    for action in ALL_ACTIONS:
        distance = apply_action(state, action).distance
        if distance < best_distance:
            best, best_distance = action, distance
    return best

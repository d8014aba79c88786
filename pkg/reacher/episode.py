# -*- coding: utf-8 -*-
"""
回合模块
固定步长回合，不提前终止
"""

from constants import EPISODE_HORIZON
from reacher.arm import Transition, apply_action, coerce_action, reward
from utils.errors import UsageError


def run_episode(policy, task, max_steps=EPISODE_HORIZON):
    """
    运行一个回合

    Args:
        policy: 状态 -> 动作（ReachAction 或 0..8 的编号）
        task (SceneState): 初始状态
        max_steps (int): 步数，恰好产生这么多条转移

    Returns:
        list[Transition]: 转移列表，仅最后一条 terminal 为 True
    """
    if max_steps < 1:
        raise UsageError(f"max_steps 必须 ≥ 1: {max_steps}")
    transitions, state = [], task
    for step in range(max_steps):
        action = coerce_action(policy(state))
        next_state = apply_action(state, action)
        transitions.append(Transition(state, action, reward(next_state), next_state, step == max_steps - 1))
        state = next_state
    return transitions


def distance_trace(task, transitions):
    """初始距离加每步之后的距离"""
    return [task.distance] + [t.state_after.distance for t in transitions]

# -*- coding: utf-8 -*-
"""
参考策略：不动、均匀随机与运动学引导
"""

import numpy as np

from reacher.arm import ALL_ACTIONS, ReachAction, guided_action


def noop_policy(state):
    return ReachAction(0, 0)


def random_policy(seed):
    """均匀随机策略（自带随机流）"""
    rng = np.random.default_rng(seed)

    def policy(state):
        return ALL_ACTIONS[int(rng.integers(len(ALL_ACTIONS)))]
    return policy


def guided_policy(state):
    return guided_action(state)

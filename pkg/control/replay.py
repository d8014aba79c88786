# -*- coding: utf-8 -*-
"""
经验回放模块
定长环形缓冲区，均匀采样
"""

import numpy as np

from constants import THETA_DIM
from control.qnet import TransitionBatch
from utils.errors import DataError, UsageError


class ReplayBuffer:
    """
    (Θ_t, a_t, r_t, Θ_{t+1}, terminal) 的环形缓冲区

    Args:
        capacity (int): 容量
        state_dim (int): 状态维度
    """

    def __init__(self, capacity, state_dim=THETA_DIM):
        if capacity < 1:
            raise UsageError(f"回放容量必须 ≥ 1: {capacity}")
        self.capacity = int(capacity)
        self.thetas = np.zeros((capacity, state_dim), dtype=np.float32)
        self.next_thetas = np.zeros((capacity, state_dim), dtype=np.float32)
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity, dtype=np.float32)
        self.terminals = np.zeros(capacity, dtype=bool)
        self.cursor = 0
        self.size = 0

    def __len__(self):
        return self.size

    def add(self, theta, action, reward, next_theta, terminal):
        i = self.cursor
        self.thetas[i] = theta
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_thetas[i] = next_theta
        self.terminals[i] = terminal
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        return i

    def sample_indices(self, m, rng):
        if self.size == 0:
            raise DataError("回放缓冲区为空")
        return rng.integers(0, self.size, size=m)

    def sample(self, m, rng):
        idx = self.sample_indices(m, rng)
        return TransitionBatch(self.thetas[idx], self.actions[idx], self.rewards[idx],
                               self.next_thetas[idx], self.terminals[idx])

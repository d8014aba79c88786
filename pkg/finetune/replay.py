# -*- coding: utf-8 -*-
"""
图像回放模块
保存 (I_t, I_{t+1}, 真值 Θ_t, a_t, r_t, terminal)，Θ 在训练时由感知网络重新计算
"""

import numpy as np

from constants import IMAGE_SIZE, THETA_DIM
from utils.errors import DataError, UsageError


class TaskBatch:
    """m 条带图像的转移"""

    def __init__(self, indices, frames, next_frames, thetas, actions, rewards, terminals):
        self.indices = indices
        self.frames = frames
        self.next_frames = next_frames
        self.thetas = thetas
        self.actions = actions
        self.rewards = rewards
        self.terminals = terminals

    @property
    def size(self):
        return len(self.actions)


class ImageReplayBuffer:
    """
    图像转移的环形缓冲区

    Args:
        capacity (int): 容量（每条约 56KB）
        image_size (int): 图像边长
    """

    def __init__(self, capacity, image_size=IMAGE_SIZE):
        if capacity < 1:
            raise UsageError(f"回放容量必须 ≥ 1: {capacity}")
        self.capacity = int(capacity)
        shape = (self.capacity, image_size, image_size)
        self.frames = np.zeros(shape, dtype=np.float32)
        self.next_frames = np.zeros(shape, dtype=np.float32)
        self.thetas = np.zeros((self.capacity, THETA_DIM), dtype=np.float32)
        self.actions = np.zeros(self.capacity, dtype=np.int64)
        self.rewards = np.zeros(self.capacity, dtype=np.float32)
        self.terminals = np.zeros(self.capacity, dtype=bool)
        self.cursor = 0
        self.size = 0

    def __len__(self):
        return self.size

    def add(self, frame, theta, action, reward, next_frame, terminal):
        i = self.cursor
        self.frames[i] = frame
        self.next_frames[i] = next_frame
        self.thetas[i] = theta
        self.actions[i] = action
        self.rewards[i] = reward
        self.terminals[i] = terminal
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        return i

    def sample(self, m, rng):
        if self.size < m:
            raise DataError(f"回放样本不足: 需要 {m}，仅有 {self.size}（预热未完成）")
        idx = rng.integers(0, self.size, size=m)
        return TaskBatch(idx, self.frames[idx], self.next_frames[idx], self.thetas[idx],
                         self.actions[idx], self.rewards[idx], self.terminals[idx])

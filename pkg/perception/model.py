# -*- coding: utf-8 -*-
"""
感知网络模块
y(I) -> Θ：三层卷积 + 全连接，sigmoid 输出保证 Θ ∈ (0,1)^5
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from constants import DOMAIN_PSEUDO_REAL, DOMAIN_SIM, IMAGE_SIZE, THETA_DIM
from network import LayerSpec, Network
from utils.errors import DataError, UsageError

logger = logging.getLogger(__name__)

PERCEPTION_NAME = "perception"
# 背景相减后的像素增益
INPUT_GAIN = 20.0


def perception_layers(image_size=IMAGE_SIZE):
    """conv 1→8 k8 s4, conv 8→16 k4 s2, conv 16→16 k3 s1, fc flatten→5 sigmoid"""
    convs = [LayerSpec.conv(1, 8, 8, 4, "relu"),
             LayerSpec.conv(8, 16, 4, 2, "relu"),
             LayerSpec.conv(16, 16, 3, 1, "relu")]
    shape = (1, image_size, image_size)
    for index, spec in enumerate(convs):
        shape = spec.output_shape(shape, index)
    return convs + [LayerSpec.fc(int(np.prod(shape)), THETA_DIM, "sigmoid")]


def build_perception_net(seed=0, image_size=IMAGE_SIZE, dtype=np.float32):
    return Network(perception_layers(image_size), (1, image_size, image_size), seed=seed, dtype=dtype)


def as_batch_input(frames):
    """
    (m,H,W) 帧数组 -> (m,1,H,W) 网络输入

    以每帧中位数估计背景，输入为 INPUT_GAIN * (背景 - I)：背景为 0，深色连杆为正
    """
    frames = np.asarray(frames)
    background = np.median(frames, axis=(1, 2), keepdims=True)
    return (INPUT_GAIN * (background - frames))[:, None, :, :]


def perceive(net, frame):
    """单帧前向，返回 (5,) 的 Θ 估计"""
    return net.predict(as_batch_input(frame.pixels[None]))[0]


def perceive_batch(net, frames, chunk=256):
    """分块批量前向"""
    frames = np.asarray(frames)
    outputs = [net.predict(as_batch_input(frames[i:i + chunk])) for i in range(0, len(frames), chunk)]
    if not outputs:
        return np.zeros((0, THETA_DIM), dtype=net.dtype)
    return np.concatenate(outputs)


@dataclass
class PerceptionBatch:
    """m 张帧、m 个真值 Θ 与各域样本数"""
    frames: np.ndarray
    thetas: np.ndarray
    composition: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.frames) < 1 or len(self.frames) != len(self.thetas):
            raise UsageError("感知批次必须非空且帧与标签数量一致")
        if self.composition and sum(self.composition.values()) != len(self.frames):
            raise UsageError("批次组成计数之和必须等于 m")

    @property
    def size(self):
        return len(self.frames)

    @classmethod
    def concat(cls, first, second):
        composition = dict(first.composition)
        for domain, count in second.composition.items():
            composition[domain] = composition.get(domain, 0) + count
        return cls(np.concatenate([first.frames, second.frames]),
                   np.concatenate([first.thetas, second.thetas]), composition)


def perception_loss(net, batch):
    """
    L_p = 1/(2m) Σ ||y(I^j) - Θ^j||²

    Returns:
        tuple: (L_p, δ_Lp 梯度)
    """
    out, tape = net.forward(as_batch_input(batch.frames))
    diff = out - np.asarray(batch.thetas, dtype=out.dtype)
    m = batch.size
    loss = 0.5 * float(np.sum(np.square(diff, dtype=np.float64))) / m
    grads, _ = net.backward(tape, diff / m)
    return loss, grads


def perception_loss_value(net, batch):
    """只计算 L_p，不做反向"""
    diff = perceive_batch(net, batch.frames) - batch.thetas
    return 0.5 * float(np.sum(np.square(diff, dtype=np.float64))) / batch.size


def sample_domain(dataset, domain, count, rng):
    """在单个域内无放回均匀采样"""
    pool = dataset.indices(domain)
    if count > len(pool):
        raise DataError(f"{domain} 域样本不足: 需要 {count}，仅有 {len(pool)}")
    return rng.choice(pool, size=count, replace=False) if count else np.zeros(0, dtype=np.int64)


def make_mixed_batch(dataset, m, real_fraction, rng):
    """
    混合域批次：round(m * real_fraction) 张扰动域帧 + 其余仿真帧，顺序打乱

    Args:
        dataset (Dataset): 数据集
        m (int): 批大小
        real_fraction (float): 扰动域比例，默认 0.75
        rng (numpy.random.Generator): 随机数生成器

    Returns:
        PerceptionBatch: 批次
    """
    if m < 1:
        raise UsageError(f"批大小必须 ≥ 1: {m}")
    if not 0.0 <= real_fraction <= 1.0:
        raise UsageError(f"real_fraction 必须在 [0,1] 内: {real_fraction}")
    n_real = int(round(m * real_fraction))
    n_sim = m - n_real
    real_idx = sample_domain(dataset, DOMAIN_PSEUDO_REAL, n_real, rng)
    sim_idx = sample_domain(dataset, DOMAIN_SIM, n_sim, rng)
    order = rng.permutation(np.concatenate([real_idx, sim_idx]).astype(np.int64))
    return PerceptionBatch(dataset.frames[order], dataset.thetas[order],
                           {DOMAIN_PSEUDO_REAL: n_real, DOMAIN_SIM: n_sim})


def evaluate_perception(net, dataset):
    """各分量的平均绝对误差 mean |y(I) - Θ|"""
    if len(dataset) == 0:
        return np.zeros(THETA_DIM)
    return np.mean(np.abs(perceive_batch(net, dataset.frames) - dataset.thetas), axis=0)

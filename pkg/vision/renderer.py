# -*- coding: utf-8 -*-
"""
渲染模块
84x84 灰度观测的确定性光栅化（整数 Bresenham 线段，无抗锯齿），
以及模拟真实相机差异的扰动域（pseudo-real）
"""

from dataclasses import dataclass, asdict

import numpy as np

from constants import DOMAIN_PSEUDO_REAL, DOMAIN_SIM, IMAGE_SIZE
from reacher.arm import joint_positions
from vision.camera import DEFAULT_CAMERA
from utils.errors import UsageError

BACKGROUND_LEVEL = 1.0
LINK_LEVEL = 0.0
TARGET_LEVEL = 0.35
EFFECTOR_LEVEL = 0.7

LINK_WIDTH = 2
TARGET_RADIUS = 3
EFFECTOR_RADIUS = 2


@dataclass(frozen=True)
class ImageFrame:
    """灰度图像与域标签"""
    pixels: np.ndarray
    domain: str = DOMAIN_SIM

    def __post_init__(self):
        if self.domain not in (DOMAIN_SIM, DOMAIN_PSEUDO_REAL):
            raise UsageError(f"未知图像域: {self.domain}")
        shape = np.shape(self.pixels)
        if shape != (IMAGE_SIZE, IMAGE_SIZE):
            raise UsageError(f"图像形状必须为 ({IMAGE_SIZE}, {IMAGE_SIZE})，实际 {shape}")


@dataclass(frozen=True)
class PerturbationSpec:
    """
    扰动参数

    noise_sigma: 加性高斯噪声标准差
    brightness: 亮度偏移范围 [-b, b]
    thickness: 连杆宽度与目标半径的整数抖动范围 [-t, t] 像素
    translation: 整体平移范围 [-s, s] 像素
    """
    noise_sigma: float = 0.05
    brightness: float = 0.1
    thickness: int = 1
    translation: int = 2

    def __post_init__(self):
        if min(self.noise_sigma, self.brightness, self.thickness, self.translation) < 0:
            raise UsageError("扰动幅度不能为负")
        if self.brightness > 1.0 or self.thickness >= LINK_WIDTH + TARGET_RADIUS:
            raise UsageError("扰动幅度过大")

    @classmethod
    def null(cls):
        return cls(0.0, 0.0, 0, 0)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    def to_dict(self):
        return asdict(self)


def _stamp(image, col, row, size, level):
    height, width = image.shape
    r0, c0 = max(row, 0), max(col, 0)
    r1, c1 = min(row + size, height), min(col + size, width)
    if r0 < r1 and c0 < c1:
        image[r0:r1, c0:c1] = level


def draw_line(image, start, end, width, level):
    """Bresenham 线段，每个点盖一个 width x width 的方块"""
    (c0, r0), (c1, r1) = start, end
    dc, dr = abs(c1 - c0), -abs(r1 - r0)
    sc = 1 if c0 < c1 else -1
    sr = 1 if r0 < r1 else -1
    err = dc + dr
    while True:
        _stamp(image, c0, r0, width, level)
        if c0 == c1 and r0 == r1:
            break
        e2 = 2 * err
        if e2 >= dr:
            err += dr
            c0 += sc
        if e2 <= dc:
            err += dc
            r0 += sr


def draw_disc(image, center, radius, level):
    """实心圆盘，超出画面的部分被裁剪"""
    col, row = center
    rows, cols = np.ogrid[:image.shape[0], :image.shape[1]]
    mask = (rows - row) ** 2 + (cols - col) ** 2 <= radius * radius
    image[mask] = level


def _rasterize(scene, camera, link_width=LINK_WIDTH, target_radius=TARGET_RADIUS, shift=(0, 0)):
    size = camera.resolution
    image = np.full((size, size), BACKGROUND_LEVEL, dtype=np.float32)
    dx, dy = shift
    points = [camera.world_to_pixel(p) for p in joint_positions(scene.q, scene.arm.link_lengths)]
    points = [(c + dx, r + dy) for c, r in points]
    for start, end in zip(points[:-1], points[1:]):
        draw_line(image, start, end, link_width, LINK_LEVEL)
    draw_disc(image, points[-1], EFFECTOR_RADIUS, EFFECTOR_LEVEL)
    tc, tr = camera.world_to_pixel(scene.target)
    draw_disc(image, (tc + dx, tr + dy), target_radius, TARGET_LEVEL)
    return image


def render(scene, camera=DEFAULT_CAMERA):
    """
    仿真域渲染：白色背景、深色三段连杆、灰色末端标记与目标圆盘

    Returns:
        ImageFrame: 域标签为 sim
    """
    return ImageFrame(_rasterize(scene, camera), DOMAIN_SIM)


def render_pseudo_real(scene, camera=DEFAULT_CAMERA, spec=PerturbationSpec(), rng=None):
    """
    扰动域渲染：在仿真渲染基础上施加带种子的几何与光度扰动

    Args:
        scene (SceneState): 场景
        camera (Camera): 相机
        spec (PerturbationSpec): 扰动幅度
        rng (numpy.random.Generator): 随机数生成器

    Returns:
        ImageFrame: 域标签为 pseudo-real
    """
    if rng is None:
        rng = np.random.default_rng(0)
    link_width = LINK_WIDTH + int(rng.integers(-spec.thickness, spec.thickness + 1))
    target_radius = TARGET_RADIUS + int(rng.integers(-spec.thickness, spec.thickness + 1))
    shift = (int(rng.integers(-spec.translation, spec.translation + 1)),
             int(rng.integers(-spec.translation, spec.translation + 1)))
    image = _rasterize(scene, camera, max(link_width, 1), max(target_radius, 1), shift)
    if spec.brightness > 0:
        image += np.float32(rng.uniform(-spec.brightness, spec.brightness))
    if spec.noise_sigma > 0:
        image += rng.normal(0.0, spec.noise_sigma, size=image.shape).astype(np.float32)
    np.clip(image, 0.0, 1.0, out=image)
    return ImageFrame(image, DOMAIN_PSEUDO_REAL)

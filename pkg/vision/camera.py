# -*- coding: utf-8 -*-
"""
相机模块
固定平面视野的投影（42 像素/米）与瓶颈向量 Θ 的归一化
"""

import math
from dataclasses import dataclass

import numpy as np

from constants import IMAGE_SIZE, THETA_DIM
from reacher.arm import DEFAULT_ARM, SceneState
from utils.errors import RangeError, UsageError


@dataclass(frozen=True)
class Camera:
    """视野中心（米）、视野宽度（米，高度相同）与分辨率（像素）"""
    center: tuple = (0.0, 0.0)
    width: float = 2.0
    resolution: int = IMAGE_SIZE

    def __post_init__(self):
        if self.width <= 0 or self.resolution <= 0:
            raise UsageError("视野宽度与分辨率必须为正")

    @property
    def px_per_m(self):
        return self.resolution / self.width

    @property
    def px_per_cm(self):
        return self.px_per_m / 100.0

    def bounds(self):
        """(x_min, x_max, y_min, y_max)"""
        half = self.width / 2.0
        cx, cy = self.center
        return (cx - half, cx + half, cy - half, cy + half)

    def world_to_pixel_float(self, point):
        """世界坐标 -> (列, 行) 浮点像素坐标，图像行向下增长"""
        cx, cy = self.center
        mid = self.resolution / 2.0
        return (mid + (point[0] - cx) * self.px_per_m, mid - (point[1] - cy) * self.px_per_m)

    def world_to_pixel(self, point):
        """世界坐标 -> (列, 行) 整数像素坐标（四舍五入）"""
        col, row = self.world_to_pixel_float(point)
        return (int(math.floor(col + 0.5)), int(math.floor(row + 0.5)))

    def cm_to_px(self, value_cm):
        return value_cm * self.px_per_cm

    @classmethod
    def from_dict(cls, data):
        return cls(center=tuple(data.get("center", (0.0, 0.0))), width=data.get("width", 2.0),
                   resolution=data.get("resolution", IMAGE_SIZE))

    def to_dict(self):
        return {"center": list(self.center), "width": self.width, "resolution": self.resolution}


DEFAULT_CAMERA = Camera()


def normalize_theta(scene, camera=DEFAULT_CAMERA):
    """
    Θ = [x*_x, x*_y, q1, q2, q3] 线性映射到 [0,1]：
    目标坐标按视野边界，关节角按各自限位

    Returns:
        numpy.ndarray: 形状 (5,) 的 float64 向量
    """
    x_min, x_max, y_min, y_max = camera.bounds()
    theta = np.empty(THETA_DIM, dtype=np.float64)
    theta[0] = (scene.target[0] - x_min) / (x_max - x_min)
    theta[1] = (scene.target[1] - y_min) / (y_max - y_min)
    for i, (angle, (lo, hi)) in enumerate(zip(scene.q, scene.arm.joint_limits)):
        theta[2 + i] = (angle - lo) / (hi - lo)
    return theta


def denormalize_theta(theta, camera=DEFAULT_CAMERA, arm=DEFAULT_ARM):
    """
    normalize_theta 的精确线性逆映射

    Returns:
        tuple: (目标 (x, y), 关节角 (q1, q2, q3))
    """
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (THETA_DIM,):
        raise UsageError(f"Θ 必须是 {THETA_DIM} 维向量，实际形状 {theta.shape}")
    if np.any(theta < 0.0) or np.any(theta > 1.0) or not np.all(np.isfinite(theta)):
        raise RangeError(f"Θ 分量超出 [0,1]: {theta.tolist()}")
    x_min, x_max, y_min, y_max = camera.bounds()
    target = (float(x_min + theta[0] * (x_max - x_min)), float(y_min + theta[1] * (y_max - y_min)))
    q = tuple(float(lo + t * (hi - lo)) for t, (lo, hi) in zip(theta[2:], arm.joint_limits))
    return target, q


def theta_to_scene(theta, camera=DEFAULT_CAMERA, arm=DEFAULT_ARM):
    target, q = denormalize_theta(theta, camera, arm)
    return SceneState(q, target, arm)

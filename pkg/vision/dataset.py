# -*- coding: utf-8 -*-
"""
数据集模块

文件布局（小端）:
    8 字节魔数 b"RDSET001"
    8 字节 uint64 头部长度
    头部 JSON: format_version, seed, counts{sim, pseudo-real}, arm, camera, perturbation, sha256
    记录序列，每条为 domain:u1 | pixels:<f4[84][84] | theta:<f4[5]，按生成顺序排列
"""

import json
import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from constants import DOMAIN_CODES, DOMAIN_PSEUDO_REAL, DOMAIN_SIM, IMAGE_SIZE, THETA_DIM
from reacher.arm import DEFAULT_ARM, sample_task, ArmModel
from utils.common_utils import derive_rng, ensure_parent_dir, sha256_bytes, split_container
from utils.decorators import performance_monitor
from utils.errors import DataError, UsageError
from vision.camera import DEFAULT_CAMERA, Camera, normalize_theta
from vision.renderer import PerturbationSpec, render, render_pseudo_real

logger = logging.getLogger(__name__)

MAGIC = b"RDSET001"
FORMAT_VERSION = 1
DOMAIN_NAMES = {code: name for name, code in DOMAIN_CODES.items()}


def record_dtype(image_size=IMAGE_SIZE):
    return np.dtype([("domain", "u1"), ("pixels", "<f4", (image_size, image_size)), ("theta", "<f4", (THETA_DIM,))])


@dataclass
class Dataset:
    """带标签的图像集合：frames (N,H,W)、thetas (N,5)、domains (N,) 域编码"""
    frames: np.ndarray
    thetas: np.ndarray
    domains: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return int(self.domains.shape[0])

    def indices(self, domain):
        return np.flatnonzero(self.domains == DOMAIN_CODES[domain])

    def count(self, domain):
        return int(np.count_nonzero(self.domains == DOMAIN_CODES[domain]))

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.frames[indices], self.thetas[indices], self.domains[indices], dict(self.meta))

    def select(self, domain):
        return self.subset(self.indices(domain))

    def split(self, fraction, seed):
        """
        按域分层留出验证集

        Args:
            fraction (float): 验证集比例，如 0.1
            seed (int): 随机种子

        Returns:
            tuple: (训练集, 验证集)
        """
        if not 0.0 <= fraction < 1.0:
            raise UsageError(f"验证集比例必须在 [0,1) 内: {fraction}")
        rng = np.random.default_rng(seed)
        train, held_out = [], []
        for domain in (DOMAIN_SIM, DOMAIN_PSEUDO_REAL):
            idx = rng.permutation(self.indices(domain))
            n_val = int(round(len(idx) * fraction))
            held_out.append(idx[:n_val])
            train.append(idx[n_val:])
        return self.subset(np.sort(np.concatenate(train))), self.subset(np.sort(np.concatenate(held_out)))

    @classmethod
    def empty(cls, image_size=IMAGE_SIZE):
        return cls(np.zeros((0, image_size, image_size), np.float32), np.zeros((0, THETA_DIM), np.float32),
                   np.zeros(0, np.uint8))


@performance_monitor
def build_dataset(n_sim, n_pseudo_real, seed, arm=DEFAULT_ARM, camera=DEFAULT_CAMERA,
                  perturbation=PerturbationSpec()):
    """
    生成带标签数据集：n_sim 张仿真帧 + n_pseudo_real 张扰动帧，
    每张帧配对其真值归一化 Θ；每条记录使用 (seed, 域, 序号) 派生的随机流

    Returns:
        Dataset: 先仿真后扰动域排列
    """
    if n_sim < 0 or n_pseudo_real < 0:
        raise UsageError("样本数不能为负")
    total = n_sim + n_pseudo_real
    size = camera.resolution
    frames = np.empty((total, size, size), dtype=np.float32)
    thetas = np.empty((total, THETA_DIM), dtype=np.float32)
    domains = np.empty(total, dtype=np.uint8)
    plan = [(DOMAIN_SIM, i) for i in range(n_sim)] + [(DOMAIN_PSEUDO_REAL, i) for i in range(n_pseudo_real)]
    for row, (domain, index) in enumerate(plan):
        rng = derive_rng(seed, DOMAIN_CODES[domain], index)
        scene = sample_task(rng, arm, camera.bounds())
        if domain == DOMAIN_SIM:
            frame = render(scene, camera)
        else:
            frame = render_pseudo_real(scene, camera, perturbation, rng)
        frames[row] = frame.pixels
        thetas[row] = normalize_theta(scene, camera)
        domains[row] = DOMAIN_CODES[domain]
    meta = {"seed": seed, "arm": arm.to_dict(), "camera": camera.to_dict(),
            "perturbation": perturbation.to_dict()}
    logger.info(f"数据集生成完成: sim={n_sim}, pseudo-real={n_pseudo_real}")
    return Dataset(frames, thetas, domains, meta)


def encode_dataset(dataset):
    size = dataset.frames.shape[1] if len(dataset) else dataset.meta.get("camera", {}).get("resolution", IMAGE_SIZE)
    records = np.empty(len(dataset), dtype=record_dtype(size))
    records["domain"] = dataset.domains
    records["pixels"] = dataset.frames
    records["theta"] = dataset.thetas
    body = records.tobytes()
    header = {
        "format_version": FORMAT_VERSION,
        "image_size": int(size),
        "counts": {DOMAIN_SIM: dataset.count(DOMAIN_SIM), DOMAIN_PSEUDO_REAL: dataset.count(DOMAIN_PSEUDO_REAL)},
        "seed": dataset.meta.get("seed"),
        "arm": dataset.meta.get("arm"),
        "camera": dataset.meta.get("camera"),
        "perturbation": dataset.meta.get("perturbation"),
        "sha256": sha256_bytes(body),
    }
    raw = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + struct.pack("<Q", len(raw)) + raw + body


def save_dataset(path, dataset):
    ensure_parent_dir(path)
    with open(path, "wb") as f:
        f.write(encode_dataset(dataset))
    logger.info(f"数据集已保存: {path} ({len(dataset)} 条)")
    return path


def load_dataset(path):
    """读取并校验数据集文件"""
    try:
        with open(path, "rb") as f:
            data = f.read()
    except FileNotFoundError:
        raise DataError(f"数据集不存在: {path}")
    header, body = split_container(data, MAGIC, path, "数据集文件")
    if header.get("format_version") != FORMAT_VERSION:
        raise DataError(f"{path}: 不支持的版本 {header.get('format_version')}")
    try:
        if sha256_bytes(body) != header["sha256"]:
            raise DataError(f"{path}: 记录校验失败")
        dtype = record_dtype(int(header["image_size"]))
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"{path}: 头部字段缺失或无效: {e}")
    if len(body) % dtype.itemsize:
        raise DataError(f"{path}: 记录长度不完整")
    records = np.frombuffer(body, dtype=dtype)
    meta = {key: header.get(key) for key in ("seed", "arm", "camera", "perturbation")}
    return Dataset(records["pixels"].astype(np.float32), records["theta"].astype(np.float32),
                   records["domain"].astype(np.uint8), meta)


def dataset_context(dataset):
    """从数据集元数据恢复 (ArmModel, Camera, PerturbationSpec)"""
    meta = dataset.meta
    arm = ArmModel.from_dict(meta["arm"]) if meta.get("arm") else DEFAULT_ARM
    camera = Camera.from_dict(meta["camera"]) if meta.get("camera") else DEFAULT_CAMERA
    perturbation = PerturbationSpec.from_dict(meta["perturbation"]) if meta.get("perturbation") else PerturbationSpec()
    return arm, camera, perturbation

# -*- coding: utf-8 -*-
"""
测试公共夹具
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent.absolute()
if str(project_root) not in sys.path:
    sys.path.insert(0, str(project_root))

from network import LayerSpec, Network  # noqa: E402
from reacher import DEFAULT_ARM  # noqa: E402
from vision import DEFAULT_CAMERA, build_dataset  # noqa: E402


@pytest.fixture
def arm():
    return DEFAULT_ARM


@pytest.fixture
def camera():
    return DEFAULT_CAMERA


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_dataset():
    """24 张仿真帧 + 200 张扰动域帧"""
    return build_dataset(24, 200, seed=3)


@pytest.fixture
def tiny_perception():
    """8x8 输入、单卷积层的微型感知网络（float64）"""
    specs = [LayerSpec.conv(1, 2, 3, 1, "relu"), LayerSpec.fc(2 * 6 * 6, 5, "sigmoid")]
    return Network(specs, (1, 8, 8), seed=5, dtype=np.float64)


@pytest.fixture
def tiny_control():
    """5 -> 6 -> 9 的微型控制网络（float64）"""
    specs = [LayerSpec.fc(5, 6, "relu"), LayerSpec.fc(6, 9, "linear")]
    return Network(specs, (5,), seed=6, dtype=np.float64)

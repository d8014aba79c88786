# -*- coding: utf-8 -*-
"""
前馈网络模块
由 LayerSpec 列表与 ParamSet 组成的网络，提供前向、精确反向传播与有限差分梯度
"""

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from network.layers import LayerSpec, activate, activate_backward, layer_backward, layer_forward
from network.optim import sgd_step
from network.params import GradSet, ParamSet
from utils.errors import NetworkConfigError, NumericalError, UsageError

logger = logging.getLogger(__name__)

_network_ids = itertools.count(1)

FINITE_DIFF_STEP = 1e-4


@dataclass
class Tape:
    """一次前向传播的激活记录，足以在不重跑前向的情况下完成反向"""
    owner: int
    version: int
    batched: bool
    output_shape: tuple
    caches: list = field(default_factory=list)
    activations: list = field(default_factory=list)


class Network:
    """
    前馈网络

    Args:
        specs (list[LayerSpec]): 逐层描述
        input_shape (tuple): 单个样本的输入形状，如 (1, 84, 84) 或 (5,)
        params (ParamSet): 初始参数；为 None 时按 seed 初始化
        seed (int): 初始化随机种子
        dtype: 参数与激活的数据类型
    """

    def __init__(self, specs, input_shape, params=None, seed=0, dtype=np.float32):
        self.specs = [s if isinstance(s, LayerSpec) else LayerSpec.from_dict(s) for s in specs]
        if not self.specs:
            raise NetworkConfigError("网络至少需要一层")
        self.input_shape = tuple(int(d) for d in input_shape)
        self.dtype = np.dtype(dtype)
        self.seed = seed
        self.shapes = self._infer_shapes()
        self._id = next(_network_ids)
        self._version = 0
        self._params = None
        self.params = params if params is not None else self.initial_params(seed)

    def _infer_shapes(self):
        shapes = [self.input_shape]
        for index, spec in enumerate(self.specs):
            spec.validate(index)
            shapes.append(spec.output_shape(shapes[-1], index))
        return shapes

    @property
    def output_shape(self):
        return self.shapes[-1]

    @property
    def params(self):
        return self._params

    @params.setter
    def params(self, value):
        expected = [(s.weight_shape(), s.bias_shape()) for s in self.specs]
        if value.shapes() != expected:
            raise NetworkConfigError(f"参数形状 {value.shapes()} 与层描述 {expected} 不一致")
        self._params = value.astype(self.dtype) if value.dtype != self.dtype else value
        self._version += 1

    @property
    def num_params(self):
        return self._params.size

    def initial_params(self, seed):
        """均匀分布 [-r, r]，r = sqrt(6 / (fan_in + fan_out))，偏置为零"""
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for spec in self.specs:
            fan_in, fan_out = spec.fans()
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=spec.weight_shape()).astype(self.dtype))
            biases.append(np.zeros(spec.bias_shape(), dtype=self.dtype))
        return ParamSet(weights, biases)

    def forward(self, x):
        """
        前向传播

        Args:
            x: 单个样本（形状等于 input_shape）或批量（首维为批量）

        Returns:
            tuple: (输出, Tape)
        """
        x = np.asarray(x, dtype=self.dtype)
        batched = x.shape != self.input_shape
        if batched and x.shape[1:] != self.input_shape:
            raise NetworkConfigError(f"输入形状 {x.shape} 与期望 {self.input_shape} 不符", 0)
        a = x if batched else x[None]
        tape = Tape(self._id, self._version, batched, ())
        for spec, w, b in zip(self.specs, self._params.weights, self._params.biases):
            z, cache = layer_forward(spec, w, b, a)
            a = activate(spec.activation, z)
            tape.caches.append(cache)
            tape.activations.append(a)
        out = a if batched else a[0]
        tape.output_shape = out.shape
        return out, tape

    def predict(self, x):
        return self.forward(x)[0]

    def backward(self, tape, upstream):
        """
        反向传播

        Args:
            tape (Tape): 本网络当前参数版本下的前向记录
            upstream: 损失对输出的梯度，形状与前向输出一致

        Returns:
            tuple: (GradSet, 对输入的梯度)
        """
        if tape is None or not tape.caches:
            raise UsageError("缺少前向记录，无法反向传播")
        if tape.owner != self._id or tape.version != self._version:
            raise UsageError("前向记录已过期（参数在前向之后被更新或来自其他网络）")
        upstream = np.asarray(upstream, dtype=self.dtype)
        if upstream.shape != tape.output_shape:
            raise UsageError(f"上游梯度形状 {upstream.shape} 与输出形状 {tape.output_shape} 不一致")
        g = upstream if tape.batched else upstream[None]
        d_weights, d_biases = [None] * len(self.specs), [None] * len(self.specs)
        for index in range(len(self.specs) - 1, -1, -1):
            spec = self.specs[index]
            g = activate_backward(spec.activation, g, tape.activations[index])
            d_weights[index], d_biases[index], g = layer_backward(
                spec, self._params.weights[index], tape.caches[index], g)
        d_input = g if tape.batched else g[0]
        return GradSet(d_weights, d_biases), d_input

    def apply_gradients(self, grads, lr):
        self.params = sgd_step(self._params, grads, lr)

    def copy(self):
        return Network(self.specs, self.input_shape, self._params.copy(), self.seed, self.dtype)

    def astype(self, dtype):
        return Network(self.specs, self.input_shape, self._params.astype(dtype), self.seed, dtype)

    def __repr__(self):
        return f"Network(layers={len(self.specs)}, input={self.input_shape}, params={self.num_params})"


def finite_diff_grad(net, x, loss_fn, step=FINITE_DIFF_STEP):
    """
    中心差分梯度 (f(θ+h) - f(θ-h)) / 2h，在 float64 下逐参数计算

    Args:
        net (Network): 被测网络（不会被修改）
        x: 网络输入
        loss_fn: 把网络输出映射为标量损失的确定性函数

    Returns:
        GradSet: float64 梯度估计
    """
    shadow = net.astype(np.float64)
    x = np.asarray(x, dtype=np.float64)
    base = shadow.params.flatten()
    estimate = np.zeros_like(base)

    def evaluate(flat):
        shadow.params = ParamSet.from_flat(shadow.params, flat)
        value = float(loss_fn(shadow.predict(x)))
        if not np.isfinite(value):
            raise NumericalError("有限差分时损失为非有限值")
        return value

    for i in range(base.size):
        shifted = base.copy()
        shifted[i] = base[i] + step
        upper = evaluate(shifted)
        shifted[i] = base[i] - step
        lower = evaluate(shifted)
        estimate[i] = (upper - lower) / (2.0 * step)
    return GradSet.from_flat(shadow.params, estimate)


def gradient_check(analytic, numeric, tolerance=1e-4, floor=1e-6):
    """返回相对误差 |a-n| / max(|a|, |n|, floor) 低于 tolerance 的参数比例"""
    a = analytic.flatten().astype(np.float64)
    n = numeric.flatten().astype(np.float64)
    errors = np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    if errors.size == 0:
        return 1.0
    return float(np.mean(errors < tolerance))

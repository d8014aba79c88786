# -*- coding: utf-8 -*-
"""
参数集合模块
ParamSet（网络参数）与 GradSet（参数梯度）共享同一布局：
逐层 (权重, 偏置)，展平顺序为层优先、层内行优先，权重在前偏置在后
"""

import numpy as np

from utils.errors import UsageError


class TensorSet:
    """逐层权重与偏置的有序集合"""

    def __init__(self, weights, biases):
        if len(weights) != len(biases):
            raise UsageError("权重与偏置的层数不一致")
        self.weights = list(weights)
        self.biases = list(biases)

    @classmethod
    def zeros_like(cls, other, dtype=None):
        return cls([np.zeros_like(w, dtype=dtype) for w in other.weights],
                   [np.zeros_like(b, dtype=dtype) for b in other.biases])

    @classmethod
    def from_flat(cls, template, flat):
        """按 template 的布局把一维向量切分为逐层张量"""
        flat = np.asarray(flat)
        if flat.ndim != 1 or flat.size != template.size:
            raise UsageError(f"展平长度 {flat.size} 与参数总数 {template.size} 不一致")
        weights, biases, offset = [], [], 0
        for w, b in zip(template.weights, template.biases):
            weights.append(flat[offset:offset + w.size].reshape(w.shape).copy())
            offset += w.size
            biases.append(flat[offset:offset + b.size].reshape(b.shape).copy())
            offset += b.size
        return cls(weights, biases)

    @property
    def size(self):
        return int(sum(w.size + b.size for w, b in zip(self.weights, self.biases)))

    @property
    def dtype(self):
        return self.weights[0].dtype if self.weights else np.dtype(np.float32)

    def shapes(self):
        return [(w.shape, b.shape) for w, b in zip(self.weights, self.biases)]

    def arrays(self):
        """按展平顺序依次返回各张量"""
        for w, b in zip(self.weights, self.biases):
            yield w
            yield b

    def flatten(self):
        if not self.weights:
            return np.zeros(0, dtype=self.dtype)
        return np.concatenate([a.ravel() for a in self.arrays()])

    def copy(self):
        return type(self)([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def astype(self, dtype):
        return type(self)([w.astype(dtype) for w in self.weights], [b.astype(dtype) for b in self.biases])

    def is_finite(self):
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    def compatible_with(self, other):
        return self.shapes() == other.shapes()

    def __len__(self):
        return len(self.weights)

    def __repr__(self):
        return f"{type(self).__name__}(layers={len(self)}, size={self.size}, dtype={self.dtype})"


class ParamSet(TensorSet):
    """网络参数"""


class GradSet(TensorSet):
    """某个标量损失对全部参数的梯度"""

    def max_abs(self):
        return max((float(np.max(np.abs(a))) for a in self.arrays() if a.size), default=0.0)

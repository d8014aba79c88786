# -*- coding: utf-8 -*-
"""
网络层模块
卷积层、全连接层与激活函数的前向/反向计算（批量维度在最前）
"""

from dataclasses import dataclass, asdict

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from utils.errors import NetworkConfigError

KIND_CONV = "conv"
KIND_FC = "fc"
ACTIVATIONS = ("relu", "sigmoid", "linear")


@dataclass(frozen=True)
class LayerSpec:
    """
    单层描述

    卷积层使用 in_channels/out_channels/kernel_size/stride，
    全连接层使用 in_dim/out_dim。
    """
    kind: str
    activation: str = "linear"
    in_channels: int = 0
    out_channels: int = 0
    kernel_size: int = 0
    stride: int = 1
    in_dim: int = 0
    out_dim: int = 0

    @classmethod
    def conv(cls, in_channels, out_channels, kernel_size, stride=1, activation="relu"):
        spec = cls(KIND_CONV, activation, in_channels=in_channels, out_channels=out_channels,
                   kernel_size=kernel_size, stride=stride)
        spec.validate()
        return spec

    @classmethod
    def fc(cls, in_dim, out_dim, activation="linear"):
        spec = cls(KIND_FC, activation, in_dim=in_dim, out_dim=out_dim)
        spec.validate()
        return spec

    @classmethod
    def from_dict(cls, data):
        spec = cls(**data)
        spec.validate()
        return spec

    def to_dict(self):
        return asdict(self)

    def validate(self, layer_index=None):
        if self.activation not in ACTIVATIONS:
            raise NetworkConfigError(f"未知激活函数 {self.activation!r}", layer_index)
        if self.kind == KIND_CONV:
            if min(self.in_channels, self.out_channels) <= 0:
                raise NetworkConfigError("通道数必须为正", layer_index)
            if self.kernel_size < 1 or self.stride < 1:
                raise NetworkConfigError("kernel_size 与 stride 必须 ≥ 1", layer_index)
        elif self.kind == KIND_FC:
            if min(self.in_dim, self.out_dim) <= 0:
                raise NetworkConfigError("全连接层维度必须为正", layer_index)
        else:
            raise NetworkConfigError(f"未知层类型 {self.kind!r}", layer_index)

    def weight_shape(self):
        if self.kind == KIND_CONV:
            return (self.out_channels, self.in_channels, self.kernel_size, self.kernel_size)
        return (self.out_dim, self.in_dim)

    def bias_shape(self):
        return (self.out_channels,) if self.kind == KIND_CONV else (self.out_dim,)

    def fans(self):
        """返回 (fan_in, fan_out)"""
        if self.kind == KIND_CONV:
            area = self.kernel_size * self.kernel_size
            return self.in_channels * area, self.out_channels * area
        return self.in_dim, self.out_dim

    def output_shape(self, input_shape, layer_index=None):
        """
        计算单个样本的输出形状

        Args:
            input_shape (tuple): 不含批量维度的输入形状
            layer_index (int): 出错时报告的层号

        Returns:
            tuple: 输出形状
        """
        if self.kind == KIND_CONV:
            if len(input_shape) != 3 or input_shape[0] != self.in_channels:
                raise NetworkConfigError(
                    f"卷积层期望输入 ({self.in_channels}, H, W)，实际 {tuple(input_shape)}", layer_index)
            _, height, width = input_shape
            out_h = (height - self.kernel_size) // self.stride + 1
            out_w = (width - self.kernel_size) // self.stride + 1
            if height < self.kernel_size or width < self.kernel_size or out_h < 1 or out_w < 1:
                raise NetworkConfigError(f"输入 {height}x{width} 小于卷积核 {self.kernel_size}", layer_index)
            return (self.out_channels, out_h, out_w)
        flat = int(np.prod(input_shape))
        if flat != self.in_dim:
            raise NetworkConfigError(f"全连接层期望 {self.in_dim} 维输入，实际 {flat}", layer_index)
        return (self.out_dim,)


def _windows(x, kernel_size, stride):
    # (N, C, H, W) -> (N, C, OH, OW, k, k)
    view = sliding_window_view(x, (kernel_size, kernel_size), axis=(2, 3))
    return view[:, :, ::stride, ::stride]


def conv_forward(x, weight, bias, stride):
    kernel_size = weight.shape[-1]
    windows = _windows(x, kernel_size, stride)
    out = np.tensordot(windows, weight, axes=([1, 4, 5], [1, 2, 3]))  # (N, OH, OW, O)
    out = out.transpose(0, 3, 1, 2) + bias[None, :, None, None]
    return np.ascontiguousarray(out), (x, windows)


def conv_backward(grad_out, weight, cache, stride):
    x, windows = cache
    kernel_size = weight.shape[-1]
    out_h, out_w = grad_out.shape[2], grad_out.shape[3]
    d_weight = np.tensordot(grad_out, windows, axes=([0, 2, 3], [0, 2, 3]))  # (O, C, k, k)
    d_bias = grad_out.sum(axis=(0, 2, 3))
    d_cols = np.tensordot(grad_out, weight, axes=([1], [0]))  # (N, OH, OW, C, k, k)
    d_x = np.zeros_like(x)
    for ki in range(kernel_size):
        row_end = ki + stride * (out_h - 1) + 1
        for kj in range(kernel_size):
            col_end = kj + stride * (out_w - 1) + 1
            d_x[:, :, ki:row_end:stride, kj:col_end:stride] += d_cols[:, :, :, :, ki, kj].transpose(0, 3, 1, 2)
    return d_weight.astype(weight.dtype, copy=False), d_bias.astype(weight.dtype, copy=False), d_x


def fc_forward(x, weight, bias):
    flat = x.reshape(x.shape[0], -1)
    return flat @ weight.T + bias, (x.shape, flat)


def fc_backward(grad_out, weight, cache):
    input_shape, flat = cache
    d_weight = grad_out.T @ flat
    d_bias = grad_out.sum(axis=0)
    d_x = (grad_out @ weight).reshape(input_shape)
    return d_weight, d_bias, d_x


def activate(kind, z):
    if kind == "relu":
        return np.maximum(z, 0)
    if kind == "sigmoid":
        # tanh 形式避免 exp 溢出
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    return z


def activate_backward(kind, grad_out, activated):
    if kind == "relu":
        return grad_out * (activated > 0)
    if kind == "sigmoid":
        return grad_out * activated * (1.0 - activated)
    return grad_out


def layer_forward(spec, weight, bias, x):
    if spec.kind == KIND_CONV:
        return conv_forward(x, weight, bias, spec.stride)
    return fc_forward(x, weight, bias)


def layer_backward(spec, weight, cache, grad_out):
    if spec.kind == KIND_CONV:
        return conv_backward(grad_out, weight, cache, spec.stride)
    return fc_backward(grad_out, weight, cache)

# -*- coding: utf-8 -*-
"""
网络核心包
最小前馈网络：卷积、全连接、ReLU/Sigmoid、精确反向传播与 SGD
"""

from .layers import LayerSpec
from .params import ParamSet, GradSet
from .net import Network, Tape, finite_diff_grad, gradient_check
from .optim import sgd_step, LinearSchedule
from .checkpoint import save_checkpoint, load_checkpoint, encode_checkpoint, decode_checkpoint

__all__ = ['LayerSpec', 'ParamSet', 'GradSet', 'Network', 'Tape', 'finite_diff_grad',
           'gradient_check', 'sgd_step', 'LinearSchedule',
           'save_checkpoint', 'load_checkpoint', 'encode_checkpoint', 'decode_checkpoint']

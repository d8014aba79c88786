# -*- coding: utf-8 -*-
"""
异常模块
项目统一的异常层次，每个异常携带命令行退出码
"""

from constants import EXIT_DATA, EXIT_DIVERGENCE, EXIT_USAGE


class ReacherException(Exception):
    """项目异常基类"""
    exit_code = EXIT_USAGE


class UsageError(ReacherException):
    """调用方式错误（参数、形状、过期的前向记录等）"""
    exit_code = EXIT_USAGE


class NetworkConfigError(UsageError):
    """网络层配置或输入形状不匹配"""

    def __init__(self, message, layer_index=None):
        if layer_index is not None:
            message = f"第 {layer_index} 层: {message}"
        super().__init__(message)
        self.layer_index = layer_index


class RangeError(UsageError):
    """数值超出允许区间"""


class DataError(ReacherException):
    """数据不足、文件损坏或前置产物缺失"""
    exit_code = EXIT_DATA


class SamplingError(DataError):
    """拒绝采样超过上限"""


class ProtocolError(DataError):
    """策略返回了非法的动作编号"""


class NumericalError(ReacherException):
    """出现非有限数值（NaN/Inf）"""
    exit_code = EXIT_DIVERGENCE


class DivergenceError(NumericalError):
    """训练过程发散"""

    def __init__(self, stage, step, last_loss=None):
        message = f"{stage} 训练在第 {step} 步发散"
        if last_loss is not None:
            message += f" (最后有限损失: {last_loss:.6g})"
        super().__init__(message)
        self.stage = stage
        self.step = step
        self.last_loss = last_loss

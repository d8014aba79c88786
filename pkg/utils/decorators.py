# -*- coding: utf-8 -*-
"""
装饰器模块
包含项目中使用的各种装饰器
"""

import functools
import logging
import time

import psutil

from utils.common_utils import format_duration

# 设置日志
logger = logging.getLogger(__name__)


def _rss_mb():
    """当前进程常驻内存（MB）"""
    try:
        return psutil.Process().memory_info().rss / (1024 ** 2)
    except (psutil.Error, OSError):
        return float("nan")


def performance_monitor(func=None, *, warn_seconds=600.0):
    """
    性能监控装饰器，记录训练/评估阶段的耗时与内存占用

    Args:
        func (function): 被装饰的函数
        warn_seconds (float): 超过该耗时则记录警告

    Returns:
        function: 装饰后的函数
    """
    if func is None:
        return functools.partial(performance_monitor, warn_seconds=warn_seconds)

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        start_time = time.perf_counter()
        start_rss = _rss_mb()
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            execution_time = time.perf_counter() - start_time
            logger.error(f"{func.__name__} 执行出错: {e} (耗时: {format_duration(execution_time)})")
            raise
        execution_time = time.perf_counter() - start_time
        end_rss = _rss_mb()
        message = (f"{func.__name__} 耗时 {format_duration(execution_time)}, "
                   f"内存 {end_rss:.1f}MB (变化 {end_rss - start_rss:+.1f}MB)")
        if execution_time > warn_seconds:
            logger.warning(message)
        else:
            logger.info(message)
        return result
    return wrapper

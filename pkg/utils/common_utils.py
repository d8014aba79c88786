# -*- coding: utf-8 -*-
"""
通用工具模块
提供日志、随机数派生、校验和与格式化等通用功能
"""

import csv
import hashlib
import json
import logging
import os
import struct
from logging.handlers import RotatingFileHandler
from pathlib import Path

import numpy as np

from utils.errors import DataError

# 设置日志
logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(level="INFO", log_file=None, max_bytes=10 * 1024 * 1024, backup_count=5):
    """
    配置根日志记录器

    Args:
        level (str): 日志级别
        log_file (str): 日志文件路径，为 None 时只输出到控制台
        max_bytes (int): 单个日志文件最大字节数
        backup_count (int): 保留的备份文件数
    """
    handlers = [logging.StreamHandler()]
    if log_file:
        log_dir = os.path.dirname(os.path.abspath(log_file))
        os.makedirs(log_dir, exist_ok=True)
        handlers.append(RotatingFileHandler(log_file, maxBytes=max_bytes,
                                            backupCount=backup_count, encoding='utf-8'))
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


def derive_rng(seed, *keys):
    """
    由主种子与若干整数键派生独立的随机数流

    Args:
        seed (int): 主种子
        *keys (int): 派生键，如 (阶段编号, 试验编号)

    Returns:
        numpy.random.Generator: 独立的随机数生成器
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(k) for k in keys]]))


def sha256_file(path):
    """计算文件的 sha256 十六进制摘要"""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


def sha256_bytes(data):
    return hashlib.sha256(data).hexdigest()


def split_container(data, magic, source, kind="文件"):
    """
    拆分 “魔数 + uint64 头部长度 + JSON 头部 + 载荷” 布局的字节串

    Args:
        data (bytes): 完整内容
        magic (bytes): 8 字节魔数
        source (str): 错误信息中使用的来源名
        kind (str): 文件种类描述

    Returns:
        tuple: (头部 dict, 载荷 bytes)

    Raises:
        DataError: 魔数不符、长度截断或头部无法解析
    """
    if len(data) < 16 or data[:8] != magic:
        raise DataError(f"{source}: 不是{kind}或文件被截断")
    (header_len,) = struct.unpack("<Q", data[8:16])
    if len(data) < 16 + header_len:
        raise DataError(f"{source}: 头部被截断 (需要 {header_len} 字节, 实际 {len(data) - 16})")
    try:
        header = json.loads(data[16:16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DataError(f"{source}: 头部损坏: {e}")
    if not isinstance(header, dict):
        raise DataError(f"{source}: 头部不是对象")
    return header, data[16 + header_len:]


def ensure_parent_dir(path):
    """确保文件所在目录存在"""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return Path(path)


def format_duration(seconds):
    """
    格式化持续时间为人类可读的格式

    Args:
        seconds (float): 秒数

    Returns:
        str: 格式化后的字符串
    """
    if seconds < 60:
        return f"{seconds:.1f}秒"
    elif seconds < 3600:
        minutes = seconds // 60
        return f"{minutes:.0f}分{seconds % 60:.0f}秒"
    hours = seconds // 3600
    minutes = (seconds % 3600) // 60
    return f"{hours:.0f}小时{minutes:.0f}分{seconds % 60:.0f}秒"


def write_csv(path, rows, fieldnames):
    """
    写 CSV 文件（列顺序固定）

    Args:
        path (str): 文件路径
        rows (list[dict]): 行
        fieldnames (list[str]): 列名
    """
    ensure_parent_dir(path)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames, extrasaction='ignore', lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({key: ("" if row.get(key) is None else row.get(key)) for key in fieldnames})
    return path

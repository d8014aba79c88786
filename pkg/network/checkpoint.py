# -*- coding: utf-8 -*-
"""
检查点模块

文件布局（小端）:
    8 字节魔数 b"RCKPT001"
    8 字节 uint64 头部长度
    头部 JSON（UTF-8，键排序，无多余空白）:
        format_version, seed, extra, networks[{name, input_shape, layers, dtype, count, sha256}]
    按 networks 顺序拼接的展平参数（float32 为 '<f4'，float64 为 '<f8'）

相同状态写出的文件逐字节一致。
"""

import json
import logging
import struct

import numpy as np

from network.layers import LayerSpec
from network.net import Network
from network.params import ParamSet
from utils.common_utils import ensure_parent_dir, sha256_bytes, split_container
from utils.errors import DataError, NetworkConfigError

logger = logging.getLogger(__name__)

MAGIC = b"RCKPT001"
FORMAT_VERSION = 1
_DTYPES = {"float32": "<f4", "float64": "<f8"}


def _canonical_json(data):
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def encode_checkpoint(networks, seed=None, extra=None):
    """把若干命名网络编码为字节串"""
    entries, blobs = [], []
    for name, net in networks.items():
        dtype_name = net.dtype.name
        if dtype_name not in _DTYPES:
            raise DataError(f"不支持的参数类型 {dtype_name}")
        blob = net.params.flatten().astype(_DTYPES[dtype_name]).tobytes()
        entries.append({
            "name": name,
            "input_shape": list(net.input_shape),
            "layers": [spec.to_dict() for spec in net.specs],
            "dtype": dtype_name,
            "count": net.num_params,
            "sha256": sha256_bytes(blob),
        })
        blobs.append(blob)
    header = _canonical_json({
        "format_version": FORMAT_VERSION,
        "seed": seed,
        "extra": extra or {},
        "networks": entries,
    }).encode("utf-8")
    return MAGIC + struct.pack("<Q", len(header)) + header + b"".join(blobs)


def decode_checkpoint(data, source="<bytes>"):
    """
    解码检查点

    Returns:
        tuple: (dict 名称->Network, 头部元数据 dict)

    Raises:
        DataError: 截断、校验失败或头部字段缺失
    """
    header, payload = split_container(data, MAGIC, source, "检查点文件")
    if header.get("format_version") != FORMAT_VERSION:
        raise DataError(f"{source}: 不支持的版本 {header.get('format_version')}")
    networks, offset = {}, 0
    try:
        for entry in header["networks"]:
            dtype = np.dtype(_DTYPES[entry["dtype"]])
            length = int(entry["count"]) * dtype.itemsize
            blob = payload[offset:offset + length]
            offset += length
            if len(blob) != length or sha256_bytes(blob) != entry["sha256"]:
                raise DataError(f"{source}: 网络 {entry['name']} 参数校验失败")
            specs = [LayerSpec.from_dict(layer) for layer in entry["layers"]]
            net = Network(specs, entry["input_shape"], seed=header.get("seed") or 0, dtype=entry["dtype"])
            flat = np.frombuffer(blob, dtype=dtype).astype(entry["dtype"])
            net.params = ParamSet.from_flat(net.params, flat)
            networks[entry["name"]] = net
    except (KeyError, TypeError, ValueError, NetworkConfigError) as e:
        raise DataError(f"{source}: 头部字段缺失或无效: {e}")
    if offset != len(payload):
        raise DataError(f"{source}: 文件尾部存在多余数据")
    return networks, header


def save_checkpoint(path, networks, seed=None, extra=None):
    """
    保存检查点

    Args:
        path (str): 文件路径
        networks (dict): 名称 -> Network
        seed (int): 产生该状态的随机种子
        extra (dict): 附加元数据（需可 JSON 序列化）
    """
    ensure_parent_dir(path)
    data = encode_checkpoint(networks, seed, extra)
    with open(path, "wb") as f:
        f.write(data)
    logger.info(f"检查点已保存: {path} ({', '.join(networks)})")
    return path


def load_checkpoint(path):
    try:
        with open(path, "rb") as f:
            data = f.read()
    except FileNotFoundError:
        raise DataError(f"检查点不存在: {path}")
    return decode_checkpoint(data, str(path))

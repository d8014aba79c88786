# -*- coding: utf-8 -*-
"""
工具函数测试
"""

import logging
import struct

import pytest

from utils.common_utils import derive_rng, format_duration, sha256_bytes, split_container, write_csv
from utils.decorators import performance_monitor
from utils.errors import DataError, DivergenceError, NetworkConfigError, UsageError


def test_derive_rng_streams():
    assert derive_rng(1, 2, 3).random() == derive_rng(1, 2, 3).random()
    assert derive_rng(1, 2, 3).random() != derive_rng(1, 2, 4).random()


def test_performance_monitor_passes_result(caplog):
    @performance_monitor
    def add(a, b):
        return a + b

    with caplog.at_level(logging.INFO):
        assert add(2, 3) == 5
    assert "add 耗时" in caplog.text and "秒" in caplog.text


def test_performance_monitor_reraises(caplog):
    @performance_monitor(warn_seconds=1.0)
    def broken():
        raise DataError("missing")

    with pytest.raises(DataError):
        broken()
    assert "missing" in caplog.text


def test_exit_codes():
    assert UsageError("x").exit_code == 1
    assert DataError("x").exit_code == 2
    assert DivergenceError("perception", 5, 0.1).exit_code == 3
    assert "第 2 层" in str(NetworkConfigError("bad", 2))


def test_write_csv_blank_for_none(tmp_path):
    path = tmp_path / "out" / "rows.csv"
    write_csv(path, [{"a": 1, "b": None}], ["a", "b"])
    assert path.read_text() == "a,b\n1,\n"


def test_format_duration():
    assert format_duration(5) == "5.0秒"
    assert format_duration(125) == "2分5秒"


def test_sha256_bytes():
    assert sha256_bytes(b"") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    assert len(sha256_bytes(b"x")) == 64


@pytest.mark.parametrize("cut", [0, 8, 12, 20])
def test_split_container_rejects_truncation(cut):
    header = b'{"a":1}'
    data = b"TESTMAG1" + struct.pack("<Q", len(header)) + header + b"payload"
    assert split_container(data, b"TESTMAG1", "mem") == ({"a": 1}, b"payload")
    with pytest.raises(DataError):
        split_container(data[:cut], b"TESTMAG1", "mem")

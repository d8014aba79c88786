# -*- coding: utf-8 -*-
"""
通用工具模块初始化文件
"""

from .decorators import performance_monitor
from .common_utils import (setup_logging, derive_rng, sha256_file, sha256_bytes, ensure_parent_dir,
                           format_duration, write_csv)
from .errors import (ReacherException, UsageError, NetworkConfigError, RangeError, DataError,
                     SamplingError, ProtocolError, NumericalError, DivergenceError)

__all__ = ['performance_monitor', 'setup_logging', 'derive_rng', 'sha256_file', 'sha256_bytes',
           'ensure_parent_dir', 'format_duration', 'write_csv', 'ReacherException', 'UsageError',
           'NetworkConfigError', 'RangeError', 'DataError', 'SamplingError', 'ProtocolError',
           'NumericalError', 'DivergenceError']
__version__ = "1.0.0"

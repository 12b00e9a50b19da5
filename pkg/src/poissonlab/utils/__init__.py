"""
工具模組

日誌與計時、SVD 線性代數、並行 map。
"""
from .logger import (
    TimingContext,
    check_logger,
    get_logger,
    log_timing,
)
from .parallel import parallel_map

__all__ = [
    # 日誌工具
    "get_logger",
    "check_logger",
    "log_timing",
    "TimingContext",
    # 並行
    "parallel_map",
]

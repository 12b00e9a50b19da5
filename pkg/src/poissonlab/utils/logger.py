"""
日誌與計時工具

所有 logger 都掛在 "poissonlab" 之下；程式庫本身不 print，也不安裝 handler，
handler 只由 CLI（或使用者）透過 setup_logger 安裝一次。

使用方式:
    from poissonlab.utils import get_logger, TimingContext

    logger = get_logger("clean.scan")
    with TimingContext("clean_locus_scan", logger) as timer:
        ...
    logger.debug(f"{timer.elapsed_ms:.1f} ms")

check 層級的訊息用 check_logger 加上 scenario / check / trace_id 前綴。
"""

from __future__ import annotations

import logging
import time
from functools import wraps
from typing import Any, Callable, MutableMapping, Optional

LOGGER_NAME = "poissonlab"

DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
TIMING_FORMAT = "[%(name)s] %(message)s"

TimingCallback = Callable[[str, float], None]


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """
    取得 "poissonlab" 或其子 logger

    Args:
        name: 子 logger 名稱，例如 "flows.leaves"；None 時回傳根 logger
    """
    return logging.getLogger(f"{LOGGER_NAME}.{name}" if name else LOGGER_NAME)


def setup_logger(
    level: int = logging.WARNING,
    format_string: str = DEFAULT_FORMAT,
    handler: Optional[logging.Handler] = None,
) -> logging.Logger:
    """
    設定根 logger 的等級，並在尚無 handler 時安裝一個

    重複呼叫只更新等級，不會疊加 handler。
    """
    root = get_logger()
    root.setLevel(level)
    if not root.handlers:
        target = handler if handler is not None else logging.StreamHandler()
        target.setFormatter(logging.Formatter(format_string))
        root.addHandler(target)
    return root


class _CheckAdapter(logging.LoggerAdapter):
    def process(self, msg: Any, kwargs: MutableMapping[str, Any]) -> tuple[Any, MutableMapping[str, Any]]:
        extra = self.extra or {}
        return f"[{extra['scenario']}/{extra['check']} {extra['trace_id'][:8]}] {msg}", kwargs


def check_logger(
    logger: logging.Logger, scenario: str, check: str, trace_id: str
) -> logging.LoggerAdapter:
    """訊息前綴為 `[scenario/check trace]` 的 adapter（trace_id 只取前 8 碼）。"""
    return _CheckAdapter(logger, {"scenario": scenario, "check": check, "trace_id": trace_id})


class TimingContext:
    """
    量測一個區塊的耗時

    離開區塊時寫一行 `[Timing] operation: 秒數` 到 logger（若該等級啟用），
    並呼叫 callback(operation, elapsed)。例外不會被吞掉。

    Attributes:
        elapsed: 秒
    """

    def __init__(
        self,
        operation: str,
        logger: Optional[logging.Logger] = None,
        level: int = logging.DEBUG,
        callback: Optional[TimingCallback] = None,
    ):
        self.operation = operation
        self.logger = logger
        self.level = level
        self.callback = callback
        self.start_time = 0.0
        self.elapsed = 0.0

    def __enter__(self) -> "TimingContext":
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.elapsed = time.perf_counter() - self.start_time
        if self.logger is not None and self.logger.isEnabledFor(self.level):
            self.logger.log(self.level, f"[Timing] {self.operation}: {self.elapsed:.4f}s")
        if self.callback is not None:
            self.callback(self.operation, self.elapsed)

    @property
    def elapsed_ms(self) -> float:
        return self.elapsed * 1000.0


def log_timing(
    operation: Optional[str] = None,
    logger: Optional[logging.Logger] = None,
    level: int = logging.DEBUG,
) -> Callable[[Callable], Callable]:
    """
    計時裝飾器

    logger 未指定時，方法改用 self._logger，一般函數用根 logger。

    使用範例:
        @log_timing("clean_locus_scan")
        def clean_locus_scan(...):
            ...
    """

    def decorator(func: Callable) -> Callable:
        name = operation or func.__name__

        @wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            target = logger
            if target is None and args:
                target = getattr(args[0], "_logger", None)
            with TimingContext(name, target or get_logger(), level):
                return func(*args, **kwargs)

        return wrapper

    return decorator


def enable_debug_logging() -> None:
    """DEBUG 等級 + 預設格式。"""
    setup_logger(level=logging.DEBUG)


def enable_timing_logging() -> None:
    """DEBUG 等級 + 精簡格式，適合只看 [Timing] 行。"""
    setup_logger(level=logging.DEBUG, format_string=TIMING_FORMAT)

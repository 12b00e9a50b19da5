"""
運算式後端 (ExpressionBackend)

負責運算式解析 + 編譯結果的快取管理，實作為執行緒安全的單例。

ScalarField 建構後不可變，因此同一組 (text, coords, params) 的解析結果
可以在所有 scenario / check / thread 之間共享。
"""

from __future__ import annotations

import threading
from functools import lru_cache
from typing import Optional

from poissonlab.exprcore.field import ScalarField
from poissonlab.exprcore.parser import parse_tree
from poissonlab.utils.logger import get_logger

from .stats import BackendStats, CacheStats

# =============================================================================
# 全域狀態
# =============================================================================

_instance: Optional["ExpressionBackend"] = None
_instance_lock = threading.Lock()

_logger = get_logger("backend.expression")


# =============================================================================
# 解析快取 (模組層級，所有 Backend 實例共享)
# =============================================================================

@lru_cache(maxsize=4096)
def _cached_parse(text: str, coords: tuple[str, ...], params: tuple[str, ...]) -> ScalarField:
    """
    快取版解析 + 編譯

    解析失敗的例外不會進入快取（lru_cache 只記住成功的回傳值）。
    """
    return ScalarField(parse_tree(text, coords, params), coords, params)


# =============================================================================
# ExpressionBackend 單例類別
# =============================================================================

class ExpressionBackend:
    """
    運算式後端 (單例)

    使用方式:
        backend = get_expression_backend()
        f = backend.parse("z - x^3", ("x", "y", "z"))
    """

    def __init__(self) -> None:
        """請使用 get_expression_backend() 取得單例，不要直接呼叫此建構函數。"""
        self._initialized = False
        self._init_lock = threading.Lock()

    def initialize(self) -> None:
        """預先編譯一個最小運算式，確認解析鏈可用。"""
        if self._initialized:
            return

        with self._init_lock:
            if self._initialized:
                return
            _cached_parse("x", ("x",), ())
            self._initialized = True
            _logger.debug("ExpressionBackend 初始化完成")

    def is_initialized(self) -> bool:
        return self._initialized

    def parse(self, text: str, coords: tuple[str, ...], params: tuple[str, ...] = ()) -> ScalarField:
        """解析運算式（命中快取時直接回傳共享的 ScalarField）。"""
        return _cached_parse(text, tuple(coords), tuple(params))

    def get_cache_stats(self) -> BackendStats:
        """取得解析快取統計。"""
        info = _cached_parse.cache_info()
        caches: dict[str, CacheStats] = {
            "parse": {
                "hits": int(info.hits),
                "misses": int(info.misses),
                "currsize": int(info.currsize),
                "maxsize": int(info.maxsize or -1),
            },
        }
        return BackendStats(initialized=bool(self._initialized), caches=caches)

    def clear_cache(self) -> None:
        """清除解析快取"""
        _cached_parse.cache_clear()


# =============================================================================
# 便捷函數
# =============================================================================

def get_expression_backend() -> ExpressionBackend:
    """
    取得 ExpressionBackend 單例

    Example:
        backend = get_expression_backend()
        f = backend.parse("x*y", ("x", "y"))
    """
    global _instance

    if _instance is not None:
        return _instance

    with _instance_lock:
        if _instance is None:
            _instance = ExpressionBackend()
        return _instance

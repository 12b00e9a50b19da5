"""
後端模組 (Backend Layer)

- 運算式解析 + 編譯快取（單例，執行緒安全）
- 統一的快取統計格式
"""

from .expression_backend import ExpressionBackend, get_expression_backend
from .stats import BackendStats, CacheStats

__all__ = [
    "ExpressionBackend",
    "get_expression_backend",
    "BackendStats",
    "CacheStats",
]

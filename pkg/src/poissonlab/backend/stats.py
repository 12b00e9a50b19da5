"""
Backend 統計資料結構（Backend Stats）

目的：
- 統一 `get_cache_stats()` 的回傳格式，讓 Engine / CLI / tests 用同一組欄位觀測快取
- 只使用標準庫型別（TypedDict），不引入額外依賴
"""

from __future__ import annotations

from typing import TypedDict


class CacheStats(TypedDict):
    """
    單一快取的統計資訊。

    欄位定義：
    - hits/misses: 命中/未命中次數
    - currsize/maxsize: 當前大小/上限（無上限時填 -1）
    """

    hits: int
    misses: int
    currsize: int
    maxsize: int


class BackendStats(TypedDict):
    """
    backend 統計總覽。

    欄位：
    - initialized: backend 是否已完成 initialize()
    - caches: 各快取統計（parse: 運算式解析與編譯）
    """

    initialized: bool
    caches: dict[str, CacheStats]

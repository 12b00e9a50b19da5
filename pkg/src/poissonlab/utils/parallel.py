"""
並行工具

網格掃描、多種子探測、彼此獨立的 scenario checks 都是「輸入唯讀、逐項獨立」的工作，
統一用 ThreadPoolExecutor.map 執行：保留輸入順序，因此結果與單執行緒完全相同。
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """
    依序套用 fn 到 items（threads > 1 時並行）。

    Args:
        fn: 純函數（不得修改共享狀態）
        items: 輸入序列
        threads: worker 數量上限

    Returns:
        list: 與 items 同順序的結果
    """
    work = list(items)
    if threads <= 1 or len(work) <= 1:
        return [fn(item) for item in work]
    with ThreadPoolExecutor(max_workers=min(threads, len(work))) as ex:
        return list(ex.map(fn, work))

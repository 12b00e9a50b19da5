"""
Backend 可觀測性測試

目的：
- `get_cache_stats()` 的欄位格式固定（initialized + caches.parse）
- 解析快取的 hits / misses 會隨使用變化，clear_cache() 後歸零
"""

from __future__ import annotations


def test_cache_stats_shape():
    from poissonlab.backend import get_expression_backend

    backend = get_expression_backend()
    backend.initialize()
    stats = backend.get_cache_stats()

    assert stats["initialized"] is True
    parse_stats = stats["caches"]["parse"]
    assert set(parse_stats) == {"hits", "misses", "currsize", "maxsize"}
    assert parse_stats["maxsize"] > 0


def test_parse_hits_and_misses_are_counted():
    from poissonlab.backend import get_expression_backend

    backend = get_expression_backend()
    backend.clear_cache()

    backend.parse("x*y - z", ("x", "y", "z"))
    after_miss = backend.get_cache_stats()["caches"]["parse"]
    assert after_miss["misses"] == 1
    assert after_miss["hits"] == 0
    assert after_miss["currsize"] == 1

    backend.parse("x*y - z", ("x", "y", "z"))
    after_hit = backend.get_cache_stats()["caches"]["parse"]
    assert after_hit["hits"] == 1
    assert after_hit["currsize"] == 1


def test_coordinates_are_part_of_the_cache_key():
    from poissonlab.backend import get_expression_backend

    backend = get_expression_backend()
    backend.clear_cache()

    first = backend.parse("x", ("x", "y"))
    second = backend.parse("x", ("x", "y", "z"))
    assert first is not second
    assert backend.get_cache_stats()["caches"]["parse"]["misses"] == 2


def test_clear_cache_resets_counters():
    from poissonlab.backend import get_expression_backend

    backend = get_expression_backend()
    backend.parse("y^2", ("x", "y"))
    backend.clear_cache()

    parse_stats = backend.get_cache_stats()["caches"]["parse"]
    assert parse_stats["hits"] == 0
    assert parse_stats["misses"] == 0
    assert parse_stats["currsize"] == 0


def test_parse_errors_are_not_cached():
    import pytest

    from poissonlab.backend import get_expression_backend
    from poissonlab.core.errors import ExpressionSyntaxError

    backend = get_expression_backend()
    backend.clear_cache()
    with pytest.raises(ExpressionSyntaxError):
        backend.parse("x +", ("x",))
    assert backend.get_cache_stats()["caches"]["parse"]["currsize"] == 0

"""
exprcore 對外函數

- parse: 經由 ExpressionBackend 快取解析（相同輸入回傳同一個不可變 ScalarField）
- evaluate / grad / jacobian: DifferentiableScalar 上的薄包裝
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from poissonlab.core.protocols import DifferentiableScalar

from .field import ScalarField


def parse(text: str, coords: Sequence[str], params: Sequence[str] = ()) -> ScalarField:
    """
    解析運算式

    Raises:
        ExpressionSyntaxError: 語法錯誤（附 byte offset）
        UnknownIdentifierError: 未宣告的識別字
    """
    from poissonlab.backend import get_expression_backend

    return get_expression_backend().parse(text, tuple(coords), tuple(params))


def evaluate(
    f: DifferentiableScalar, p: Sequence[float], params: Mapping[str, float] | None = None
) -> float:
    return f.eval(p, params)


def grad(
    f: DifferentiableScalar, p: Sequence[float], params: Mapping[str, float] | None = None
) -> np.ndarray:
    return f.grad(p, params)


def jacobian(
    fs: Sequence[DifferentiableScalar],
    p: Sequence[float],
    params: Mapping[str, float] | None = None,
) -> np.ndarray:
    """第 i 列為 grad(fs[i], p)；錯誤直接往上拋。"""
    if not fs:
        return np.zeros((0, len(p)))
    return np.vstack([f.grad(p, params) for f in fs])

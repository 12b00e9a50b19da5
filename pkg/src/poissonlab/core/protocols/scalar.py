"""
Scalar Protocols

定義所有「可求值、可求一階導數」的純量函數必須實作的最小介面。
"""

from __future__ import annotations

from typing import Mapping, Protocol, Sequence, runtime_checkable

import numpy as np


@runtime_checkable
class DifferentiableScalar(Protocol):
    """
    可微純量協議

    最小介面：
    - coords / params：宣告的座標與參數名稱
    - eval(p, params) -> float
    - grad(p, params) -> np.ndarray（長度 = len(coords)）
    - with_params(**values)：綁定參數預設值，回傳新物件
    """

    @property
    def coords(self) -> tuple[str, ...]: ...

    @property
    def params(self) -> tuple[str, ...]: ...

    def eval(self, p: Sequence[float], params: Mapping[str, float] | None = None) -> float: ...

    def grad(self, p: Sequence[float], params: Mapping[str, float] | None = None) -> np.ndarray: ...

    def with_params(self, **values: float) -> "DifferentiableScalar": ...

"""
Map Protocols

- EvaluableMap: 只需要求值（C0 極限映射，D19：永不微分）
- DifferentiableMap: 另外提供 Jacobian（光滑族成員、數值 flow map）
- ClosedFormFlowProtocol: 封閉形式的 flow φ^t
"""

from __future__ import annotations

from typing import Protocol, Sequence, runtime_checkable

import numpy as np


@runtime_checkable
class EvaluableMap(Protocol):
    """可求值映射協議：evaluate(p) -> np.ndarray"""

    def evaluate(self, p: Sequence[float]) -> np.ndarray: ...


@runtime_checkable
class DifferentiableMap(EvaluableMap, Protocol):
    """可微映射協議：另外提供 jacobian(p) -> (m × n) 矩陣"""

    def jacobian(self, p: Sequence[float]) -> np.ndarray: ...


@runtime_checkable
class ClosedFormFlowProtocol(Protocol):
    """封閉形式 flow 協議：evaluate(p, t) 與 at(t) -> EvaluableMap"""

    def evaluate(self, p: Sequence[float], t: float) -> np.ndarray: ...

    def at(self, t: float) -> EvaluableMap: ...

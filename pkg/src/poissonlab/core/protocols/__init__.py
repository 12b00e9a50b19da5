"""
Protocols 套件

定義跨模組共用的最小介面（Structural Subtyping），讓 ScalarField 與 ImplicitFunction、
運算式映射與封閉形式 flow 都能被下游運算一視同仁地使用。
"""

from .maps import ClosedFormFlowProtocol, DifferentiableMap, EvaluableMap
from .scalar import DifferentiableScalar

__all__ = [
    "DifferentiableScalar",
    "EvaluableMap",
    "DifferentiableMap",
    "ClosedFormFlowProtocol",
]

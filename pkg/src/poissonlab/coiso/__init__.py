"""
coiso - 子流形、coisotropy 與特徵葉層
"""

from .characteristic import (
    CharacteristicData,
    CoisotropyResult,
    characteristic_data,
    defining_brackets,
    is_coisotropic_at,
    trace_characteristic_leaf,
    vanishing_ideal_bracket_check,
)
from .submanifold import ManifoldGrid, Submanifold, grid_on_submanifold

__all__ = [
    "Submanifold",
    "ManifoldGrid",
    "grid_on_submanifold",
    "CoisotropyResult",
    "CharacteristicData",
    "is_coisotropic_at",
    "defining_brackets",
    "characteristic_data",
    "trace_characteristic_leaf",
    "vanishing_ideal_bracket_check",
]

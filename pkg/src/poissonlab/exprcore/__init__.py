"""
exprcore - 運算式解析與 forward-mode 一階導數

- parse(text, coords, params) -> ScalarField（經由 backend 快取）
- ScalarField.eval / grad：精確一階導數，下游不受有限差分雜訊影響
- ImplicitFunction：由單調方程式定義的隱函數

import 維持輕量（PEP 562 延遲載入），也避免與 backend 之間的循環 import。
"""

from __future__ import annotations

import importlib
from typing import Any

_LAZY_IMPORTS: dict[str, tuple[str, str]] = {
    "ScalarField": ("poissonlab.exprcore.field", "ScalarField"),
    "coordinate_field": ("poissonlab.exprcore.field", "coordinate_field"),
    "constant_field": ("poissonlab.exprcore.field", "constant_field"),
    "ImplicitFunction": ("poissonlab.exprcore.implicit", "ImplicitFunction"),
    "parse": ("poissonlab.exprcore.api", "parse"),
    "evaluate": ("poissonlab.exprcore.api", "evaluate"),
    "grad": ("poissonlab.exprcore.api", "grad"),
    "jacobian": ("poissonlab.exprcore.api", "jacobian"),
    "parse_tree": ("poissonlab.exprcore.parser", "parse_tree"),
    "to_text": ("poissonlab.exprcore.printer", "to_text"),
    "cube_root_approximant": ("poissonlab.exprcore.library", "cube_root_approximant"),
}

__all__ = list(_LAZY_IMPORTS)


def __getattr__(name: str) -> Any:
    if name not in _LAZY_IMPORTS:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    module_path, attr_name = _LAZY_IMPORTS[name]
    value = getattr(importlib.import_module(module_path), attr_name)
    globals()[name] = value
    return value


def __dir__() -> list[str]:
    return sorted(set(list(globals().keys()) + list(_LAZY_IMPORTS.keys())))

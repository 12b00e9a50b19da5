"""
poissonlab - Poisson 幾何的 chart 數值實驗室

核心概念：
- 在一個座標 chart 上以運算式描述 Poisson 雙向量、Hamiltonian 與子流形
- 數值計算葉維度、Hamiltonian flow、coisotropy 與特徵葉層
- 分類 coisotropic 子流形與辛葉的 clean 交點，研究 Poisson 映射族的 C^0 極限
- 以文字檔描述的 scenario 把上述性質變成可重現、以容差判定的 check

官方入口（穩定 API）：
- `poissonlab.ScenarioEngine`
- `poissonlab.parse` / `poissonlab.PoissonStructure` / `poissonlab.Submanifold`

此模組刻意維持 import 輕量：
- 不在 `import poissonlab` 階段就載入 numpy 之外的模組（matplotlib 只在輸出 SVG 時載入）。
- 透過 PEP 562 `__getattr__` 在「第一次使用到某個符號」時才延遲載入。
"""

from __future__ import annotations

import importlib
from typing import Any

# =============================================================================
# Lazy imports（PEP 562）
# =============================================================================

_LAZY_IMPORTS: dict[str, tuple[str, str]] = {
    # Engine（官方入口）
    "ScenarioEngine": ("poissonlab.scenarios.engine", "ScenarioEngine"),
    # 運算式
    "parse": ("poissonlab.exprcore.api", "parse"),
    "ScalarField": ("poissonlab.exprcore.field", "ScalarField"),
    "ImplicitFunction": ("poissonlab.exprcore.implicit", "ImplicitFunction"),
    # Poisson 結構與 flow
    "Chart": ("poissonlab.poisson.chart", "Chart"),
    "PoissonStructure": ("poissonlab.poisson.structure", "PoissonStructure"),
    "FlowSpec": ("poissonlab.flows.integrator", "FlowSpec"),
    "integrate": ("poissonlab.flows.integrator", "integrate"),
    "flow_map": ("poissonlab.flows.maps", "flow_map"),
    # 子流形與 clean 分類
    "Submanifold": ("poissonlab.coiso.submanifold", "Submanifold"),
    "is_coisotropic_at": ("poissonlab.coiso.characteristic", "is_coisotropic_at"),
    "LeafAtlas": ("poissonlab.clean.atlas", "LeafAtlas"),
    "LeafRegion": ("poissonlab.clean.atlas", "LeafRegion"),
    "classify": ("poissonlab.clean.classify", "classify"),
    "clean_locus_scan": ("poissonlab.clean.scan", "clean_locus_scan"),
    # C^0 極限
    "SmoothMap": ("poissonlab.c0lab.maps", "SmoothMap"),
    "MapFamily": ("poissonlab.c0lab.family", "MapFamily"),
    "verify_family": ("poissonlab.c0lab.family", "verify_family"),
    # Scenarios
    "Scenario": ("poissonlab.scenarios.model", "Scenario"),
    "Report": ("poissonlab.scenarios.model", "Report"),
    "load": ("poissonlab.scenarios.loader", "load"),
    "save": ("poissonlab.scenarios.loader", "save"),
    "builtin": ("poissonlab.scenarios.loader", "builtin"),
    "list_builtins": ("poissonlab.scenarios.loader", "list_builtins"),
    # Backend（進階用途）
    "ExpressionBackend": ("poissonlab.backend", "ExpressionBackend"),
    "get_expression_backend": ("poissonlab.backend", "get_expression_backend"),
    # Events（進階用途）
    "CheckEvent": ("poissonlab.core.events", "CheckEvent"),
    "CheckEventHandler": ("poissonlab.core.events", "CheckEventHandler"),
    # 例外
    "PoissonLabError": ("poissonlab.core.errors", "PoissonLabError"),
}

# =============================================================================
# 日誌工具
# =============================================================================
from poissonlab.utils.logger import enable_debug_logging, enable_timing_logging, get_logger

__all__ = [
    # Engine
    "ScenarioEngine",
    # Logging
    "get_logger",
    "enable_debug_logging",
    "enable_timing_logging",
    # Core objects
    "parse",
    "ScalarField",
    "ImplicitFunction",
    "Chart",
    "PoissonStructure",
    "FlowSpec",
    "integrate",
    "flow_map",
    "Submanifold",
    "is_coisotropic_at",
    "LeafAtlas",
    "LeafRegion",
    "classify",
    "clean_locus_scan",
    "SmoothMap",
    "MapFamily",
    "verify_family",
    # Scenarios
    "Scenario",
    "Report",
    "load",
    "save",
    "builtin",
    "list_builtins",
    # Backend (advanced)
    "ExpressionBackend",
    "get_expression_backend",
    # Events (advanced)
    "CheckEvent",
    "CheckEventHandler",
    "PoissonLabError",
]

__version__ = "0.1.0"


def __getattr__(name: str) -> Any:
    """延遲載入頂層公開符號（PEP 562）。"""
    if name not in _LAZY_IMPORTS:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    module_path, attr_name = _LAZY_IMPORTS[name]
    module = importlib.import_module(module_path)
    value = getattr(module, attr_name)
    globals()[name] = value
    return value


def __dir__() -> list[str]:
    """讓 IDE/dir() 能看到延遲載入的符號清單。"""
    return sorted(set(list(globals().keys()) + list(_LAZY_IMPORTS.keys())))

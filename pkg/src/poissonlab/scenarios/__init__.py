"""
scenarios - 以文字檔描述、以容差判定的實驗

- loader: .scn 文字格式的 load / loads / save / dumps，以及內建 scenario
- context: 把文字描述轉成 chart、結構、子流形、atlas、flow 與映射族
- checks: check 運算註冊表
- runner / engine: 執行 checks，產生 Report 與事件
- emit: JSON / CSV / SVG 輸出
"""

from __future__ import annotations

import importlib
from typing import Any

_LAZY_IMPORTS: dict[str, tuple[str, str]] = {
    "Scenario": ("poissonlab.scenarios.model", "Scenario"),
    "CheckSpec": ("poissonlab.scenarios.model", "CheckSpec"),
    "Report": ("poissonlab.scenarios.model", "Report"),
    "CheckRecord": ("poissonlab.scenarios.model", "CheckRecord"),
    "Artifact": ("poissonlab.scenarios.model", "Artifact"),
    "load": ("poissonlab.scenarios.loader", "load"),
    "loads": ("poissonlab.scenarios.loader", "loads"),
    "save": ("poissonlab.scenarios.loader", "save"),
    "dumps": ("poissonlab.scenarios.loader", "dumps"),
    "builtin": ("poissonlab.scenarios.loader", "builtin"),
    "list_builtins": ("poissonlab.scenarios.loader", "list_builtins"),
    "ScenarioContext": ("poissonlab.scenarios.context", "ScenarioContext"),
    "CHECK_OPS": ("poissonlab.scenarios.checks", "CHECK_OPS"),
    "available_ops": ("poissonlab.scenarios.checks", "available_ops"),
    "register": ("poissonlab.scenarios.checks", "register"),
    "ScenarioRunner": ("poissonlab.scenarios.runner", "ScenarioRunner"),
    "run_scenario": ("poissonlab.scenarios.runner", "run_scenario"),
    "ScenarioEngine": ("poissonlab.scenarios.engine", "ScenarioEngine"),
    "emit": ("poissonlab.scenarios.emit", "emit"),
    "report_to_json": ("poissonlab.scenarios.emit", "report_to_json"),
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

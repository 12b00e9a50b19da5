"""
常用運算式範本

h_n(s) = s·(s² + 1/n)^(-1/3)：cbrt 的光滑單調逼近族
    h_n'(s) = (s² + 1/n)^(-4/3)·(s²/3 + 1/n) > 0
    n → ∞ 時在緊緻集上均勻收斂到 cbrt(s)
"""

from __future__ import annotations


def cube_root_approximant(arg: str, index: str = "n") -> str:
    """回傳 h_index(arg) 的運算式文字（arg 會被加括號）。"""
    s = f"({arg})"
    return f"{s}*({s}^2 + 1/{index})^(-1/3)"

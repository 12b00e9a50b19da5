"""
運算式輸出 (Pretty-printer)

輸出完全加括號的文字；重新解析會得到結構相等的樹。
"""

from __future__ import annotations

from fractions import Fraction

from .ast import BinOp, Const, Coord, Func, Neg, Node, Param, Pow


def _number(value: float) -> str:
    text = repr(float(value))
    if value < 0:
        return f"(-{text[1:]})"
    return text


def _exponent(e: Fraction) -> str:
    if e.denominator == 1:
        return str(e.numerator) if e.numerator >= 0 else f"({e.numerator})"
    return f"({e.numerator}/{e.denominator})"


def to_text(node: Node) -> str:
    """將 AST 輸出為運算式字串。"""
    if isinstance(node, Const):
        return _number(node.value)
    if isinstance(node, (Coord, Param)):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Pow):
        base = to_text(node.base)
        if isinstance(node.base, Pow) or (isinstance(node.base, Const) and node.base.value < 0):
            base = f"({base})"
        return f"{base}^{_exponent(node.exponent)}"
    if isinstance(node, Func):
        return f"{node.name}({', '.join(to_text(a) for a in node.args)})"
    raise TypeError(f"未知節點型別 {type(node).__name__}")

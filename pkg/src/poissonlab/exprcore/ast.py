"""
運算式樹節點（AST）

所有節點皆為 frozen dataclass：建構後不可變，可安全地在多執行緒間共享，
並以 dataclass 的欄位相等作為「結構相等」。
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

# 單參數函數與雙參數函數
UNARY_FUNCS = ("sqrt", "cbrt", "sin", "cos", "exp", "smoothstep")
BINARY_FUNCS = ("min", "max")
FUNCS = UNARY_FUNCS + BINARY_FUNCS


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Coord:
    name: str
    index: int


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # "+", "-", "*", "/"
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    """有理數次方；分母為奇數時允許負底數（實數分支，D1）。"""

    base: "Node"
    exponent: Fraction


@dataclass(frozen=True)
class Func:
    name: str
    args: tuple["Node", ...]


Node = Union[Const, Coord, Param, Neg, BinOp, Pow, Func]


def iter_nodes(node: Node):
    """前序走訪所有節點。"""
    yield node
    if isinstance(node, Neg):
        yield from iter_nodes(node.operand)
    elif isinstance(node, BinOp):
        yield from iter_nodes(node.left)
        yield from iter_nodes(node.right)
    elif isinstance(node, Pow):
        yield from iter_nodes(node.base)
    elif isinstance(node, Func):
        for arg in node.args:
            yield from iter_nodes(arg)


def referenced_names(node: Node) -> set[str]:
    """樹中引用到的座標與參數名稱。"""
    return {n.name for n in iter_nodes(node) if isinstance(n, (Coord, Param))}

"""
AST 編譯器：純值求值與 forward-mode 對偶數（dual number）求值

把樹一次編譯成 Python closure，之後每次求值不再走訪節點型別分派。

- compile_value(node) -> fn(p, q) -> float
- compile_dual(node, n) -> fn(p, q) -> (value, gradient ndarray)

p 是座標序列，q 是參數 dict。部分函數在無定義處拋 DomainError，
在不可微處（僅 dual 模式）拋 NonDifferentiableError（D1）。
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from poissonlab.core.errors import DomainError, MissingParameterError, NonDifferentiableError

from .ast import BinOp, Const, Coord, Func, Neg, Node, Param, Pow

Env = Mapping[str, float]
ValueFn = Callable[[Sequence[float], Env], float]
Dual = tuple[float, np.ndarray]
DualFn = Callable[[Sequence[float], Env], Dual]


# =============================================================================
# 純量原語
# =============================================================================

def real_power(base: float, exponent: Fraction) -> float:
    """有理數次方（奇分母允許負底數，取實數分支）。"""
    if base > 0:
        return base ** float(exponent)
    if base == 0:
        if exponent < 0:
            raise DomainError("0 的負次方無定義")
        return 1.0 if exponent == 0 else 0.0
    if exponent.denominator % 2 == 0:
        raise DomainError(f"負數 {base!r} 的偶次根無定義")
    magnitude = (-base) ** float(exponent)
    return -magnitude if exponent.numerator % 2 else magnitude


def power_derivative(base: float, exponent: Fraction) -> float:
    """d/db b^e；在 0 且導數無界時拋 NonDifferentiableError。"""
    if exponent == 0:
        return 0.0
    if base == 0:
        if exponent.denominator == 1 and exponent >= 1:
            return float(exponent) * real_power(0.0, exponent - 1)
        if exponent > 1:
            return 0.0
        raise NonDifferentiableError(f"x^({exponent}) 在 0 不可微")
    return float(exponent) * real_power(base, exponent - 1)


def smoothstep(t: float) -> float:
    """6t⁵ − 15t⁴ + 10t³，t 先夾到 [0, 1]。"""
    t = min(1.0, max(0.0, t))
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def smoothstep_derivative(t: float) -> float:
    """30t²(t − 1)²；端點兩側的單邊導數都是 0。"""
    if t <= 0.0 or t >= 1.0:
        return 0.0
    return 30.0 * t * t * (t - 1.0) * (t - 1.0)


def _sqrt(x: float) -> float:
    if x < 0:
        raise DomainError(f"sqrt 的引數 {x!r} 為負")
    return math.sqrt(x)


def _cbrt(x: float) -> float:
    return float(np.cbrt(x))


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError as exc:
        raise DomainError(f"exp({x!r}) 溢位") from exc


def _divide(a: float, b: float) -> float:
    if b == 0:
        raise DomainError("除以零")
    return a / b


_UNARY_VALUE: dict[str, Callable[[float], float]] = {
    "sqrt": _sqrt,
    "cbrt": _cbrt,
    "sin": math.sin,
    "cos": math.cos,
    "exp": _exp,
    "smoothstep": smoothstep,
}


# =============================================================================
# 純值編譯
# =============================================================================

def compile_value(node: Node) -> ValueFn:
    """編譯為純值求值 closure。"""
    if isinstance(node, Const):
        value = node.value
        return lambda p, q: value
    if isinstance(node, Coord):
        index = node.index
        return lambda p, q: float(p[index])
    if isinstance(node, Param):
        name = node.name

        def param(p: Sequence[float], q: Env) -> float:
            try:
                return float(q[name])
            except KeyError:
                raise MissingParameterError(name) from None

        return param
    if isinstance(node, Neg):
        inner = compile_value(node.operand)
        return lambda p, q: -inner(p, q)
    if isinstance(node, BinOp):
        left = compile_value(node.left)
        right = compile_value(node.right)
        if node.op == "+":
            return lambda p, q: left(p, q) + right(p, q)
        if node.op == "-":
            return lambda p, q: left(p, q) - right(p, q)
        if node.op == "*":
            return lambda p, q: left(p, q) * right(p, q)
        return lambda p, q: _divide(left(p, q), right(p, q))
    if isinstance(node, Pow):
        base = compile_value(node.base)
        exponent = node.exponent
        return lambda p, q: real_power(base(p, q), exponent)
    if isinstance(node, Func):
        args = [compile_value(a) for a in node.args]
        if node.name == "min":
            return lambda p, q: min(args[0](p, q), args[1](p, q))
        if node.name == "max":
            return lambda p, q: max(args[0](p, q), args[1](p, q))
        fn = _UNARY_VALUE[node.name]
        arg = args[0]
        return lambda p, q: fn(arg(p, q))
    raise TypeError(f"未知節點型別 {type(node).__name__}")


# =============================================================================
# Dual 編譯（forward mode，一階）
# =============================================================================

def _chain(arg: DualFn, value: Callable[[float], float], slope: Callable[[float], float]) -> DualFn:
    def fn(p: Sequence[float], q: Env) -> Dual:
        v, d = arg(p, q)
        return value(v), slope(v) * d

    return fn


def _sqrt_slope(x: float) -> float:
    if x == 0:
        raise NonDifferentiableError("sqrt 在 0 不可微")
    return 0.5 / math.sqrt(x)


def _cbrt_slope(x: float) -> float:
    if x == 0:
        raise NonDifferentiableError("cbrt 在 0 不可微")
    c = _cbrt(x)
    return 1.0 / (3.0 * c * c)


_UNARY_SLOPE: dict[str, Callable[[float], float]] = {
    "sqrt": _sqrt_slope,
    "cbrt": _cbrt_slope,
    "sin": math.cos,
    "cos": lambda x: -math.sin(x),
    "exp": _exp,
    "smoothstep": smoothstep_derivative,
}


def _extremum(args: list[DualFn], pick_max: bool) -> DualFn:
    first, second = args

    def fn(p: Sequence[float], q: Env) -> Dual:
        a, da = first(p, q)
        b, db = second(p, q)
        if a == b:
            if not np.array_equal(da, db):
                name = "max" if pick_max else "min"
                raise NonDifferentiableError(f"{name} 在兩引數相等且梯度不同處不可微")
            return a, da
        if (a > b) == pick_max:
            return a, da
        return b, db

    return fn


def compile_dual(node: Node, n: int) -> DualFn:
    """編譯為 dual 求值 closure；梯度長度為 n（座標數）。"""
    zero = np.zeros(n)
    if isinstance(node, Const):
        value = node.value
        return lambda p, q: (value, zero)
    if isinstance(node, Coord):
        index = node.index
        unit = np.zeros(n)
        unit[index] = 1.0
        return lambda p, q: (float(p[index]), unit)
    if isinstance(node, Param):
        param = compile_value(node)
        return lambda p, q: (param(p, q), zero)
    if isinstance(node, Neg):
        inner = compile_dual(node.operand, n)

        def neg(p: Sequence[float], q: Env) -> Dual:
            v, d = inner(p, q)
            return -v, -d

        return neg
    if isinstance(node, BinOp):
        return _compile_binop(node, n)
    if isinstance(node, Pow):
        base = compile_dual(node.base, n)
        exponent = node.exponent

        def power(p: Sequence[float], q: Env) -> Dual:
            v, d = base(p, q)
            return real_power(v, exponent), power_derivative(v, exponent) * d

        return power
    if isinstance(node, Func):
        args = [compile_dual(a, n) for a in node.args]
        if node.name in ("min", "max"):
            return _extremum(args, pick_max=node.name == "max")
        return _chain(args[0], _UNARY_VALUE[node.name], _UNARY_SLOPE[node.name])
    raise TypeError(f"未知節點型別 {type(node).__name__}")


def _compile_binop(node: BinOp, n: int) -> DualFn:
    left = compile_dual(node.left, n)
    right = compile_dual(node.right, n)

    if node.op == "+":
        def add(p: Sequence[float], q: Env) -> Dual:
            a, da = left(p, q)
            b, db = right(p, q)
            return a + b, da + db

        return add
    if node.op == "-":
        def sub(p: Sequence[float], q: Env) -> Dual:
            a, da = left(p, q)
            b, db = right(p, q)
            return a - b, da - db

        return sub
    if node.op == "*":
        def mul(p: Sequence[float], q: Env) -> Dual:
            a, da = left(p, q)
            b, db = right(p, q)
            return a * b, b * da + a * db

        return mul

    def div(p: Sequence[float], q: Env) -> Dual:
        a, da = left(p, q)
        b, db = right(p, q)
        if b == 0:
            raise DomainError("除以零")
        return a / b, (b * da - a * db) / (b * b)

    return div

"""
ScalarField：座標上的運算式純量場

- 不可變（tree / coords / params / 參數預設值建構後不變），可安全共享
- 求值與一階導數都由編譯後的 closure 完成（forward mode，無有限差分雜訊）
- 參數在求值時才代入（D4），同一棵樹可服務整個族
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence, Union

import numpy as np

from poissonlab.core.errors import DomainError

from .ast import BinOp, Const, Coord, Neg, Node
from .compiler import compile_dual, compile_value
from .printer import to_text

Operand = Union["ScalarField", float, int]


class ScalarField:
    """
    運算式純量場

    使用方式:
        f = parse("x*(x^2 + 1/n)^(-1/3)", ["x", "y", "z"], ["n"])
        f.eval((8, 0, 0), {"n": 1e6})     # ≈ 2.0
        f.grad((1, 0, 0), {"n": 10})       # np.ndarray
    """

    __slots__ = ("_tree", "_coords", "_params", "_defaults", "_value_fn", "_dual_fn")

    def __init__(
        self,
        tree: Node,
        coords: Sequence[str],
        params: Sequence[str] = (),
        defaults: Mapping[str, float] | None = None,
    ):
        self._tree = tree
        self._coords = tuple(coords)
        self._params = tuple(params)
        self._defaults = dict(defaults or {})
        self._value_fn = compile_value(tree)
        self._dual_fn = compile_dual(tree, len(self._coords))

    # -------------------------------------------------------------------------
    # 基本屬性
    # -------------------------------------------------------------------------

    @property
    def tree(self) -> Node:
        return self._tree

    @property
    def coords(self) -> tuple[str, ...]:
        return self._coords

    @property
    def params(self) -> tuple[str, ...]:
        return self._params

    @property
    def defaults(self) -> dict[str, float]:
        return dict(self._defaults)

    @property
    def text(self) -> str:
        """完全加括號的文字表示（重新解析得到結構相等的樹）。"""
        return to_text(self._tree)

    def __repr__(self) -> str:
        return f"ScalarField({self.text!r}, coords={self._coords})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ScalarField):
            return NotImplemented
        return (
            self._tree == other._tree
            and self._coords == other._coords
            and self._params == other._params
            and self._defaults == other._defaults
        )

    def __hash__(self) -> int:
        return hash((self._tree, self._coords, self._params))

    # -------------------------------------------------------------------------
    # 求值
    # -------------------------------------------------------------------------

    def _env(self, params: Mapping[str, float] | None) -> Mapping[str, float]:
        if not params:
            return self._defaults
        if not self._defaults:
            return params
        return {**self._defaults, **params}

    def _check_point(self, p: Sequence[float]) -> None:
        if len(p) != len(self._coords):
            raise ValueError(f"點的維度 {len(p)} 與座標數 {len(self._coords)} 不符")

    def eval(self, p: Sequence[float], params: Mapping[str, float] | None = None) -> float:
        """
        在點 p 求值

        Raises:
            DomainError: 部分函數無定義或結果非有限值
        """
        self._check_point(p)
        try:
            value = self._value_fn(p, self._env(params))
        except (OverflowError, ZeroDivisionError) as exc:
            raise DomainError(f"{self.text} 在 {tuple(p)} 求值失敗：{exc}") from exc
        if not math.isfinite(value):
            raise DomainError(f"{self.text} 在 {tuple(p)} 得到非有限值")
        return value

    def value_and_grad(
        self, p: Sequence[float], params: Mapping[str, float] | None = None
    ) -> tuple[float, np.ndarray]:
        """一次取得值與梯度。"""
        self._check_point(p)
        try:
            value, grad = self._dual_fn(p, self._env(params))
        except (OverflowError, ZeroDivisionError) as exc:
            raise DomainError(f"{self.text} 在 {tuple(p)} 求導失敗：{exc}") from exc
        grad = np.array(grad, dtype=float)
        if not math.isfinite(value) or not np.all(np.isfinite(grad)):
            raise DomainError(f"{self.text} 在 {tuple(p)} 得到非有限值")
        return value, grad

    def grad(self, p: Sequence[float], params: Mapping[str, float] | None = None) -> np.ndarray:
        """
        梯度（forward mode）

        Raises:
            NonDifferentiableError: 在不可微點（例如 cbrt 在 0）
        """
        return self.value_and_grad(p, params)[1]

    def with_params(self, **values: float) -> "ScalarField":
        """綁定參數預設值，回傳新的 ScalarField（共享同一棵樹）。"""
        unknown = set(values) - set(self._params)
        if unknown:
            raise ValueError(f"未宣告的參數 {sorted(unknown)}")
        return ScalarField(self._tree, self._coords, self._params, {**self._defaults, **values})

    # -------------------------------------------------------------------------
    # 算術（建構新樹，用於理想元素 a·F 與重組 A(p)·F）
    # -------------------------------------------------------------------------

    def _lift(self, other: Operand) -> "ScalarField":
        if isinstance(other, ScalarField):
            if other._coords != self._coords:
                raise ValueError("兩個 ScalarField 的座標不一致")
            return other
        value = float(other)
        node: Node = Const(abs(value))
        if value < 0:
            node = Neg(node)
        return ScalarField(node, self._coords)

    def _combine(self, op: str, left: "ScalarField", right: "ScalarField") -> "ScalarField":
        params = tuple(dict.fromkeys(left._params + right._params))
        defaults = {**left._defaults, **right._defaults}
        return ScalarField(BinOp(op, left._tree, right._tree), self._coords, params, defaults)

    def __add__(self, other: Operand) -> "ScalarField":
        return self._combine("+", self, self._lift(other))

    def __radd__(self, other: Operand) -> "ScalarField":
        return self._combine("+", self._lift(other), self)

    def __sub__(self, other: Operand) -> "ScalarField":
        return self._combine("-", self, self._lift(other))

    def __rsub__(self, other: Operand) -> "ScalarField":
        return self._combine("-", self._lift(other), self)

    def __mul__(self, other: Operand) -> "ScalarField":
        return self._combine("*", self, self._lift(other))

    def __rmul__(self, other: Operand) -> "ScalarField":
        return self._combine("*", self._lift(other), self)

    def __neg__(self) -> "ScalarField":
        return ScalarField(Neg(self._tree), self._coords, self._params, self._defaults)


def coordinate_field(name: str, coords: Sequence[str]) -> ScalarField:
    """座標函數 x_k 作為 ScalarField（座標 Hamiltonian 用）。"""
    coords = tuple(coords)
    return ScalarField(Coord(name, coords.index(name)), coords)


def constant_field(value: float, coords: Sequence[str]) -> ScalarField:
    """常數函數。"""
    node: Node = Const(abs(float(value)))
    if value < 0:
        node = Neg(node)
    return ScalarField(node, coords)

"""
隱函數 (ImplicitFunction)

以方程式 E(w, p) = 0（對未知數 w 嚴格單調）定義的純量函數：

    value(p) = offset(p) + scale · w(p)

- 求值：[-1, 1] 起倍增找變號區間，再用二分法保護的 Newton 收斂到 1e-12
- 梯度：隱函數微分 ∂w/∂p_i = −E_{p_i} / E_w；E_w = 0 時不可微

典型用途：
    z = f(x, y) 的反解 x = g(y, z)（f 對 x 單調）
    h_n⁻¹(h_n(z) + 1)
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from poissonlab.core.errors import DomainError, ImplicitSolveError, NonDifferentiableError
from poissonlab.core.run_config import LabDefaults

from .field import ScalarField

MAX_EXPANSIONS = 60
MAX_ITERATIONS = 200


class ImplicitFunction:
    """
    隱函數純量（滿足 DifferentiableScalar 協議）

    Args:
        equation: 座標為 (unknown, *coords) 的 ScalarField
        unknown: 未知數名稱（equation.coords[0]）
        coords: chart 座標
        offset: 加在解上的 ScalarField（None 表示 0）
        scale: 解的係數
        tol: 解的收斂容差

    使用方式:
        E = parse("w^3 - z", ["w", "x", "y", "z"])
        cube_root = ImplicitFunction(E, "w", ["x", "y", "z"])
        cube_root.eval((0, 0, -8))   # ≈ -2
    """

    def __init__(
        self,
        equation: ScalarField,
        unknown: str,
        coords: Sequence[str],
        offset: ScalarField | None = None,
        scale: float = 1.0,
        tol: float = LabDefaults.IMPLICIT_TOL,
        defaults: Mapping[str, float] | None = None,
    ):
        coords = tuple(coords)
        if equation.coords != (unknown,) + coords:
            raise ValueError(f"方程式座標必須是 {(unknown,) + coords}，收到 {equation.coords}")
        if offset is not None and offset.coords != coords:
            raise ValueError("offset 的座標與 chart 座標不一致")
        self._equation = equation
        self._unknown = unknown
        self._coords = coords
        self._offset = offset
        self._scale = float(scale)
        self._tol = tol
        self._defaults = dict(defaults or {})
        names = list(equation.params)
        if offset is not None:
            names.extend(offset.params)
        self._params = tuple(dict.fromkeys(names))

    @property
    def coords(self) -> tuple[str, ...]:
        return self._coords

    @property
    def params(self) -> tuple[str, ...]:
        return self._params

    @property
    def equation(self) -> ScalarField:
        return self._equation

    @property
    def unknown(self) -> str:
        return self._unknown

    @property
    def offset(self) -> ScalarField | None:
        return self._offset

    @property
    def scale(self) -> float:
        return self._scale

    @property
    def defaults(self) -> dict[str, float]:
        return dict(self._defaults)

    def __repr__(self) -> str:
        return f"ImplicitFunction({self._equation.text!r} = 0 for {self._unknown})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ImplicitFunction):
            return NotImplemented
        return (
            self._equation == other._equation
            and self._unknown == other._unknown
            and self._offset == other._offset
            and self._scale == other._scale
            and self._defaults == other._defaults
        )

    def __hash__(self) -> int:
        return hash((self._equation, self._unknown, self._scale))

    def with_params(self, **values: float) -> "ImplicitFunction":
        unknown = set(values) - set(self._params)
        if unknown:
            raise ValueError(f"未宣告的參數 {sorted(unknown)}")
        return ImplicitFunction(
            self._equation,
            self._unknown,
            self._coords,
            self._offset,
            self._scale,
            self._tol,
            {**self._defaults, **values},
        )

    # -------------------------------------------------------------------------
    # 求解
    # -------------------------------------------------------------------------

    def _env(self, params: Mapping[str, float] | None) -> Mapping[str, float]:
        if not params:
            return self._defaults
        return {**self._defaults, **params}

    def _residual(self, w: float, p: Sequence[float], q: Mapping[str, float]) -> float:
        return self._equation.eval((w, *p), q)

    def _bracket(self, p: Sequence[float], q: Mapping[str, float]) -> tuple[float, float, float, float]:
        lo, hi = -1.0, 1.0
        e_lo, e_hi = self._residual(lo, p, q), self._residual(hi, p, q)
        for _ in range(MAX_EXPANSIONS):
            if e_lo == 0.0 or e_hi == 0.0 or (e_lo < 0) != (e_hi < 0):
                return lo, hi, e_lo, e_hi
            width = hi - lo
            lo, hi = lo - width, hi + width
            e_lo, e_hi = self._residual(lo, p, q), self._residual(hi, p, q)
        raise ImplicitSolveError(f"{self!r} 在 {tuple(p)} 找不到變號區間")

    def solve(self, p: Sequence[float], params: Mapping[str, float] | None = None) -> float:
        """
        求 E(w, p) = 0 的解 w

        Raises:
            ImplicitSolveError: 找不到變號區間或不收斂
        """
        if len(p) != len(self._coords):
            raise ValueError(f"點的維度 {len(p)} 與座標數 {len(self._coords)} 不符")
        q = self._env(params)
        try:
            lo, hi, e_lo, e_hi = self._bracket(p, q)
        except DomainError as exc:
            if isinstance(exc, ImplicitSolveError):
                raise
            raise ImplicitSolveError(f"{self!r} 在 {tuple(p)} 找變號區間時失敗：{exc}") from exc
        if e_lo == 0.0:
            return lo
        if e_hi == 0.0:
            return hi
        increasing = e_hi > 0

        w = 0.5 * (lo + hi)
        for _ in range(MAX_ITERATIONS):
            try:
                value, grad = self._equation.value_and_grad((w, *p), q)
                slope = float(grad[0])
            except NonDifferentiableError:
                value, slope = self._residual(w, p, q), 0.0
            if value == 0.0:
                return w
            # 維護變號區間
            if (value > 0) == increasing:
                hi = w
            else:
                lo = w
            candidate = w - value / slope if slope != 0.0 else math.nan
            if not (lo < candidate < hi):
                candidate = 0.5 * (lo + hi)
            step = abs(candidate - w)
            w = candidate
            if step <= self._tol * (1.0 + abs(w)) or hi - lo <= self._tol * (1.0 + abs(w)):
                return w
        raise ImplicitSolveError(f"{self!r} 在 {tuple(p)} 未在 {MAX_ITERATIONS} 次迭代內收斂")

    # -------------------------------------------------------------------------
    # DifferentiableScalar 介面
    # -------------------------------------------------------------------------

    def eval(self, p: Sequence[float], params: Mapping[str, float] | None = None) -> float:
        q = self._env(params)
        w = self.solve(p, q)
        base = self._offset.eval(p, q) if self._offset is not None else 0.0
        return base + self._scale * w

    def grad(self, p: Sequence[float], params: Mapping[str, float] | None = None) -> np.ndarray:
        """
        梯度（隱函數微分）

        Raises:
            NonDifferentiableError: 解處 E_w = 0
        """
        q = self._env(params)
        w = self.solve(p, q)
        full = self._equation.grad((w, *p), q)
        slope = float(full[0])
        if slope == 0.0:
            raise NonDifferentiableError(f"{self!r} 在 {tuple(p)} 不可微（∂E/∂{self._unknown} = 0）")
        result = -self._scale * full[1:] / slope
        if self._offset is not None:
            result = result + self._offset.grad(p, q)
        return result

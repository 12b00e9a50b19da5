"""
封閉形式的 flow

- ExpressionFlow: 分量是含時間參數 t 的運算式
- ImplicitShearFlow: H = x_shear − g(·) 型 C0-Hamiltonian 的極限 flow
    along 座標以速度 1 平移，shear 座標跟著 g 的差值移動，
    drift 座標（可選）累積 −∫ factor·∂g/∂wrt ds（Simpson）

兩者都滿足 ClosedFormFlowProtocol；at(t) 回傳只求值的映射。
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from poissonlab.core.protocols import DifferentiableScalar
from poissonlab.poisson.chart import Chart

from .maps import SmoothMap

SIMPSON_INTERVALS = 64


class FlowAtTime:
    """固定時間的 flow，作為 EvaluableMap。"""

    __slots__ = ("_flow", "_t")

    def __init__(self, flow: "ExpressionFlow | ImplicitShearFlow", t: float):
        self._flow = flow
        self._t = float(t)

    @property
    def t(self) -> float:
        return self._t

    def evaluate(self, p: Sequence[float]) -> np.ndarray:
        return self._flow.evaluate(p, self._t)


class ExpressionFlow:
    """
    φ^t(p) 以運算式給出

    使用方式:
        flow = ExpressionFlow(SmoothMap([parse("x + t*(cbrt(z) - z)", xyz, ("t",)), ...]))
        flow.evaluate((0, 0, 8), 1.0)
    """

    def __init__(self, components: SmoothMap, time_param: str = "t"):
        if time_param not in components.params:
            raise ValueError(f"flow 分量沒有時間參數 {time_param!r}")
        self._components = components
        self._time_param = time_param

    @property
    def components(self) -> SmoothMap:
        return self._components

    @property
    def time_param(self) -> str:
        return self._time_param

    def evaluate(self, p: Sequence[float], t: float) -> np.ndarray:
        return self._components.with_params(**{self._time_param: float(t)}).evaluate(p)

    def at(self, t: float) -> SmoothMap:
        return self._components.with_params(**{self._time_param: float(t)})


class ImplicitShearFlow:
    """
    H = x_shear − g(p) 的 flow（g 通常是 ImplicitFunction）

    φ^t(p)：along += t；shear += g(p_t) − g(p)；
    drift −= ∫_0^t factor(p_s)·∂g/∂wrt(p_s) ds，p_s 為 along 平移 s 後的點。
    factor 為 0 的位置不對 g 微分。
    """

    def __init__(
        self,
        coords: Sequence[str],
        g: DifferentiableScalar,
        along: str,
        shear: str,
        drift: str | None = None,
        factor: DifferentiableScalar | None = None,
        wrt: str | None = None,
        domain: Chart | None = None,
    ):
        self._coords = tuple(coords)
        if g.coords != self._coords:
            raise ValueError(f"g 的座標 {g.coords} 與 flow 座標 {self._coords} 不符")
        if (drift is None) != (factor is None) or (drift is None) != (wrt is None):
            raise ValueError("drift、factor、wrt 必須同時提供")
        self._g = g
        self._along = self._coords.index(along)
        self._shear = self._coords.index(shear)
        self._drift = self._coords.index(drift) if drift is not None else None
        self._wrt = self._coords.index(wrt) if wrt is not None else None
        self._factor = factor
        self._domain = domain

    @property
    def coords(self) -> tuple[str, ...]:
        return self._coords

    def _shifted(self, p: np.ndarray, s: float) -> np.ndarray:
        q = p.copy()
        q[self._along] += s
        return q

    def _drift_rate(self, q: np.ndarray) -> float:
        assert self._factor is not None and self._wrt is not None
        weight = self._factor.eval(q)
        if weight == 0.0:
            return 0.0
        return weight * float(self._g.grad(q)[self._wrt])

    def _drift_integral(self, p: np.ndarray, t: float) -> float:
        m = SIMPSON_INTERVALS
        h = t / m
        total = 0.0
        for k in range(m + 1):
            weight = 1.0 if k in (0, m) else (4.0 if k % 2 else 2.0)
            total += weight * self._drift_rate(self._shifted(p, k * h))
        return total * h / 3.0

    def evaluate(self, p: Sequence[float], t: float) -> np.ndarray:
        point = self._domain.require(p) if self._domain is not None else np.asarray(p, dtype=float)
        t = float(t)
        moved = self._shifted(point, t)
        moved[self._shear] = point[self._shear] + self._g.eval(moved) - self._g.eval(point)
        if self._drift is not None and t != 0.0:
            moved[self._drift] = point[self._drift] - self._drift_integral(point, t)
        return moved

    def at(self, t: float) -> FlowAtTime:
        return FlowAtTime(self, t)

"""
分量式映射

SmoothMap 的每個分量都是 DifferentiableScalar；族的成員以參數（例如 n）區分，
同一份運算式樹服務整個族。極限映射（含 cbrt 等不可微分量）也用 SmoothMap 表示，
但只呼叫 evaluate，不做微分。
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from poissonlab.core.protocols import DifferentiableScalar
from poissonlab.exprcore.field import coordinate_field
from poissonlab.poisson.chart import Chart


class SmoothMap:
    """
    分量式映射 φ = (φ_1, …, φ_m)

    使用方式:
        phi = SmoothMap([parse("x + 1", xyz), parse("y", xyz), parse("z", xyz)], chart)
        phi.evaluate((0, 0, 0))     # array([1., 0., 0.])
        phi.jacobian((0, 0, 0))     # 3 × 3
    """

    __slots__ = ("_components", "_domain", "_params")

    def __init__(
        self,
        components: Sequence[DifferentiableScalar],
        domain: Chart | None = None,
        params: Mapping[str, float] | None = None,
    ):
        if not components:
            raise ValueError("SmoothMap 至少需要一個分量")
        coords = components[0].coords
        for component in components:
            if component.coords != coords:
                raise ValueError(f"分量座標不一致：{component.coords} vs {coords}")
        if domain is not None and domain.coord_names != coords:
            raise ValueError(f"domain 座標 {domain.coord_names} 與分量座標 {coords} 不符")
        self._components = tuple(components)
        self._domain = domain
        self._params = dict(params or {})

    @classmethod
    def identity(cls, coords: Sequence[str], domain: Chart | None = None) -> "SmoothMap":
        return cls([coordinate_field(name, coords) for name in coords], domain)

    @property
    def components(self) -> tuple[DifferentiableScalar, ...]:
        return self._components

    @property
    def coords(self) -> tuple[str, ...]:
        return self._components[0].coords

    @property
    def domain(self) -> Chart | None:
        return self._domain

    @property
    def params(self) -> tuple[str, ...]:
        names: list[str] = []
        for component in self._components:
            names.extend(name for name in component.params if name not in names)
        return tuple(names)

    def __repr__(self) -> str:
        return f"SmoothMap({len(self._components)} components, params={self._params})"

    def _point(self, p: Sequence[float]) -> np.ndarray:
        if self._domain is not None:
            return self._domain.require(p)
        return np.asarray(p, dtype=float)

    def evaluate(self, p: Sequence[float]) -> np.ndarray:
        """
        Raises:
            OutOfDomainError: p 不在 domain 內
            DomainError: 分量求值失敗
        """
        point = self._point(p)
        return np.array([c.eval(point, self._params) for c in self._components])

    def jacobian(self, p: Sequence[float]) -> np.ndarray:
        """
        Raises:
            NonDifferentiableError: 某個分量在 p 不可微（極限映射常見）
        """
        point = self._point(p)
        return np.vstack([c.grad(point, self._params) for c in self._components])

    def with_params(self, **values: float) -> "SmoothMap":
        """綁定參數值（例如成員 n），回傳新的 SmoothMap。"""
        unknown = [name for name in values if name not in self.params]
        if unknown:
            raise ValueError(f"未知參數：{unknown}")
        return SmoothMap(self._components, self._domain, {**self._params, **values})

"""
Chart 與網格

Chart 是帶名稱的座標 box；所有點都先經過 require() 檢查（D8：越界即錯誤，不 clamp）。
Grid 是沿指定軸的格點，其餘座標固定。
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from poissonlab.core.errors import OutOfDomainError

# 邊界判定的相對 slack（吸收格點與投影的捨入誤差）
BOUNDARY_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class Grid:
    """
    網格

    - axes: 變動的座標名稱
    - axis_values: 每個變動軸的節點值
    - points: (N, dim) 陣列，依 axes 的 C-order（最後一軸變化最快）
    """

    axes: tuple[str, ...]
    axis_values: tuple[np.ndarray, ...]
    points: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(v) for v in self.axis_values)

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    def spacing(self, axis: str) -> float:
        values = self.axis_values[self.axes.index(axis)]
        if len(values) < 2:
            return 0.0
        return float(values[1] - values[0])


@dataclass(frozen=True)
class Chart:
    """
    座標 chart：名稱 + 每座標的閉區間

    使用方式:
        chart = Chart(("x", "y", "z"), (-1, -1, -1), (1, 1, 1))
        chart.require((0.5, 0, 0))
        grid = chart.grid(101, axes=("x", "y"), fixed={"z": 0.0})
    """

    coord_names: tuple[str, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coord_names", tuple(self.coord_names))
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        if not self.coord_names:
            raise ValueError("chart 至少需要一個座標")
        if len(set(self.coord_names)) != len(self.coord_names):
            raise ValueError(f"座標名稱重複：{self.coord_names}")
        if not (len(self.lower) == len(self.upper) == len(self.coord_names)):
            raise ValueError("區間數量與座標數不符")
        for name, lo, hi in zip(self.coord_names, self.lower, self.upper):
            if not lo <= hi:
                raise ValueError(f"座標 {name} 的區間 [{lo}, {hi}] 為空")

    @property
    def dim(self) -> int:
        return len(self.coord_names)

    def index(self, name: str) -> int:
        return self.coord_names.index(name)

    def _slack(self, k: int) -> float:
        return BOUNDARY_SLACK * max(1.0, abs(self.lower[k]), abs(self.upper[k]))

    def contains(self, p: Sequence[float]) -> bool:
        if len(p) != self.dim:
            return False
        return all(
            self.lower[k] - self._slack(k) <= float(p[k]) <= self.upper[k] + self._slack(k)
            for k in range(self.dim)
        )

    def require(self, p: Sequence[float]) -> np.ndarray:
        """
        檢查點在 box 內並轉成 ndarray

        Raises:
            OutOfDomainError: 點不在 box 內（或維度不符）
        """
        point = np.asarray(p, dtype=float)
        if point.shape != (self.dim,) or not np.all(np.isfinite(point)) or not self.contains(point):
            raise OutOfDomainError(point.ravel())
        return point

    def sample(self, rng: np.random.Generator, count: int, margin: float = 0.0) -> np.ndarray:
        """在 box 內（各邊內縮 margin 比例）均勻取樣 (count, dim)。"""
        lo = np.array(self.lower)
        hi = np.array(self.upper)
        pad = (hi - lo) * margin
        return rng.uniform(lo + pad, hi - pad, size=(count, self.dim))

    def default_value(self, name: str) -> float:
        """未指定時的固定座標值：0 在區間內取 0，否則取中點。"""
        k = self.index(name)
        lo, hi = self.lower[k], self.upper[k]
        return 0.0 if lo <= 0.0 <= hi else 0.5 * (lo + hi)

    def axis_nodes(self, name: str, nodes: int) -> np.ndarray:
        """沿單一座標的等距節點；最接近 0 的節點吸附到 0。"""
        k = self.index(name)
        lo, hi = self.lower[k], self.upper[k]
        if nodes < 2 or lo == hi:
            return np.array([0.5 * (lo + hi)])
        values = np.linspace(lo, hi, nodes)
        if lo < 0.0 < hi:
            nearest = int(np.argmin(np.abs(values)))
            if abs(values[nearest]) < 0.5 * (values[1] - values[0]):
                values[nearest] = 0.0
        return values

    def grid(
        self,
        nodes: int | Sequence[int],
        axes: Sequence[str] | None = None,
        fixed: Mapping[str, float] | None = None,
    ) -> Grid:
        """
        建立網格

        Args:
            nodes: 每軸節點數（整數表示每軸相同）
            axes: 變動的座標（預設全部）
            fixed: 其餘座標的固定值（預設 default_value）
        """
        axes = tuple(axes) if axes is not None else self.coord_names
        for name in axes:
            if name not in self.coord_names:
                raise ValueError(f"未知座標 {name!r}")
        counts = [int(nodes)] * len(axes) if isinstance(nodes, (int, np.integer)) else [int(c) for c in nodes]
        if len(counts) != len(axes):
            raise ValueError("nodes 數量與 axes 數量不符")
        fixed = dict(fixed or {})
        axis_values = tuple(self.axis_nodes(name, count) for name, count in zip(axes, counts))

        mesh = np.meshgrid(*axis_values, indexing="ij")
        total = int(np.prod([len(v) for v in axis_values]))
        points = np.empty((total, self.dim))
        for k, name in enumerate(self.coord_names):
            if name in axes:
                points[:, k] = mesh[axes.index(name)].ravel()
            else:
                points[:, k] = float(fixed.get(name, self.default_value(name)))
        return Grid(axes=axes, axis_values=axis_values, points=points)

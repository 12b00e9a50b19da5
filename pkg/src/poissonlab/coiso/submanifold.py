"""
Submanifold：正則 level set {F_1 = … = F_k = 0}

- project_to: Gauss–Newton（最小範數更新）投影到 C 上
- tangent_basis: ker dF_p 的正交基底（SVD）
- grid_on_submanifold: 沿指定軸的格點，只動其餘座標投影到 C 上
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from poissonlab.core.errors import (
    DomainError,
    IrregularSubmanifoldError,
    NonDifferentiableError,
    NotOnSubmanifoldError,
    ProjectionError,
    RankDeficiencyError,
)
from poissonlab.core.protocols import DifferentiableScalar
from poissonlab.core.run_config import LabDefaults
from poissonlab.poisson.chart import Chart, Grid
from poissonlab.utils.linalg import null_space, numerical_rank
from poissonlab.utils.logger import get_logger
from poissonlab.utils.parallel import parallel_map

_logger = get_logger("coiso.submanifold")

# 建構時的探測格點數（每軸）
PROBE_NODES = 5


class Submanifold:
    """
    正則 level set

    使用方式:
        C = Submanifold.create(chart, [parse("z - x^3", coords)])
        q = C.project_to((1, 0, 0.9))
        C.tangent_basis(q)    # 3 × 2
    """

    def __init__(self, chart: Chart, defining: Sequence[DifferentiableScalar], name: str = ""):
        if not defining:
            raise ValueError("至少需要一個定義函數")
        for f in defining:
            if tuple(f.coords) != chart.coord_names:
                raise ValueError(f"定義函數 {f!r} 的座標與 chart 不一致")
        if len(defining) > chart.dim:
            raise ValueError(f"codim {len(defining)} 不可大於 chart 維度 {chart.dim}")
        self._chart = chart
        self._defining = tuple(defining)
        self._name = name

    @classmethod
    def create(
        cls,
        chart: Chart,
        defining: Sequence[DifferentiableScalar],
        name: str = "",
        validate: bool = True,
        probe_nodes: int = PROBE_NODES,
    ) -> "Submanifold":
        """
        建構並在探測格點上驗證正則性

        Raises:
            IrregularSubmanifoldError: 某個投影成功的探測點上 dF 不滿秩
        """
        manifold = cls(chart, defining, name)
        if validate:
            manifold.validate(probe_nodes)
        return manifold

    @property
    def chart(self) -> Chart:
        return self._chart

    @property
    def defining(self) -> tuple[DifferentiableScalar, ...]:
        return self._defining

    @property
    def name(self) -> str:
        return self._name

    @property
    def codim(self) -> int:
        return len(self._defining)

    @property
    def dim(self) -> int:
        return self._chart.dim - self.codim

    def __repr__(self) -> str:
        texts = ", ".join(str(getattr(f, "text", f)) for f in self._defining)
        return f"Submanifold({self._name or '?'}: {texts} = 0)"

    # -------------------------------------------------------------------------
    # 基本量
    # -------------------------------------------------------------------------

    def values(self, p: Sequence[float]) -> np.ndarray:
        return np.array([f.eval(p) for f in self._defining])

    def residual(self, p: Sequence[float]) -> float:
        """‖F(p)‖_∞"""
        return float(np.max(np.abs(self.values(p))))

    def jacobian(self, p: Sequence[float]) -> np.ndarray:
        """dF_p（k × n）"""
        return np.vstack([f.grad(p) for f in self._defining])

    def require_on(self, p: Sequence[float], tol: float = LabDefaults.ON_SUBMANIFOLD_TOL) -> np.ndarray:
        """
        Raises:
            NotOnSubmanifoldError: ‖F(p)‖_∞ > tol
        """
        point = self._chart.require(p)
        residual = self.residual(point)
        if residual > tol:
            raise NotOnSubmanifoldError(point, residual)
        return point

    def validate(self, probe_nodes: int = PROBE_NODES) -> int:
        """在探測格點投影並檢查 dF 滿秩；回傳成功投影的點數。"""
        converged = 0
        for seed in self._chart.grid(probe_nodes).points:
            try:
                point = self.project_to(seed)
                jac = self.jacobian(point)
            except (ProjectionError, DomainError, NonDifferentiableError):
                continue
            converged += 1
            if numerical_rank(jac, LabDefaults.TOL_RANK, LabDefaults.RANK_FLOOR) < self.codim:
                raise IrregularSubmanifoldError(
                    f"{self!r} 在 {tuple(point)} 不是正則 level set（dF 不滿秩）"
                )
        if converged == 0:
            _logger.warning(f"{self!r} 在探測格點上沒有任何投影成功")
        return converged

    # -------------------------------------------------------------------------
    # 投影與切空間
    # -------------------------------------------------------------------------

    def project_to(
        self,
        seed: Sequence[float],
        tol: float = LabDefaults.PROJECTION_TOL,
        max_iter: int = LabDefaults.PROJECTION_MAX_ITER,
        free: Sequence[int] | None = None,
    ) -> np.ndarray:
        """
        Gauss–Newton 投影（每步最小範數更新）

        Args:
            seed: 起點
            free: 只允許變動的座標索引（None 表示全部）

        Raises:
            ProjectionError: 未在 max_iter 內達到 ‖F‖_∞ ≤ tol（附殘差歷史），或結果出界
        """
        x = np.asarray(seed, dtype=float).copy()
        columns = list(range(x.size)) if free is None else list(free)
        residuals: list[float] = []
        for iteration in range(max_iter + 1):
            try:
                values = self.values(x)
            except DomainError as exc:
                raise ProjectionError(f"投影途中求值失敗：{exc}", residuals) from exc
            residual = float(np.max(np.abs(values)))
            residuals.append(residual)
            if residual <= tol:
                if not self._chart.contains(x):
                    raise ProjectionError(f"投影結果 {tuple(x)} 不在 chart 內", residuals)
                return x
            if iteration == max_iter:
                break
            try:
                jac = self.jacobian(x)[:, columns]
            except (DomainError, NonDifferentiableError) as exc:
                raise ProjectionError(f"投影途中求導失敗：{exc}", residuals) from exc
            step, *_ = np.linalg.lstsq(jac, -values, rcond=None)
            if not np.all(np.isfinite(step)):
                raise ProjectionError("Gauss–Newton 更新非有限值", residuals)
            x[columns] += step
        raise ProjectionError(
            f"Gauss–Newton 在 {max_iter} 次迭代內未收斂（最後殘差 {residuals[-1]:.3e}）", residuals
        )

    def tangent_basis(self, p: Sequence[float]) -> np.ndarray:
        """
        T_pC = ker dF_p 的正交基底（n × (n − k)）

        Raises:
            NotOnSubmanifoldError: p 不在 C 上（容差 1e-8）
            RankDeficiencyError: dF_p 不滿秩
        """
        point = self.require_on(p)
        jac = self.jacobian(point)
        if numerical_rank(jac, LabDefaults.TOL_RANK, LabDefaults.RANK_FLOOR) < self.codim:
            raise RankDeficiencyError(f"{self!r} 在 {tuple(point)} 的 dF 不滿秩")
        return null_space(jac, LabDefaults.TOL_RANK, LabDefaults.RANK_FLOOR)


# =============================================================================
# 子流形上的網格
# =============================================================================

@dataclass(frozen=True, eq=False)
class ManifoldGrid:
    """
    子流形上的網格

    - grid: 原始格點（沿 axes）
    - points: 投影後的點（未收斂處保留原始格點）
    - mask: 是否成功投影到 C 上
    """

    grid: Grid
    points: np.ndarray
    mask: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return self.grid.shape

    @property
    def converged(self) -> np.ndarray:
        return self.points[self.mask]


def grid_on_submanifold(
    manifold: Submanifold,
    axes: Sequence[str],
    nodes: int | Sequence[int],
    fixed: Mapping[str, float] | None = None,
    threads: int = 1,
    window: Chart | None = None,
) -> ManifoldGrid:
    """
    沿 axes 建立格點，固定 axes 與 fixed 中的座標，只讓其餘座標做 Newton 投影。

    window 給定時，格點只鋪在這個子 box 內（座標名稱須與 C 的 chart 相同）。
    """
    chart = manifold.chart
    if window is not None and window.coord_names != chart.coord_names:
        raise ValueError(f"window 座標 {window.coord_names} 與 chart {chart.coord_names} 不同")
    fixed = dict(fixed or {})
    free = [k for k, name in enumerate(chart.coord_names) if name not in axes and name not in fixed]
    if not free:
        raise ValueError("沒有可變動的座標可供投影")
    grid = (window or chart).grid(nodes, axes, fixed)

    def project(seed: np.ndarray) -> tuple[np.ndarray, bool]:
        try:
            return manifold.project_to(seed, free=free), True
        except ProjectionError:
            return seed, False

    results = parallel_map(project, list(grid.points), threads)
    points = np.array([r[0] for r in results]).reshape(grid.points.shape)
    mask = np.array([r[1] for r in results], dtype=bool)
    return ManifoldGrid(grid=grid, points=points, mask=mask)

"""
映射族與 C0 收斂

- c0_distance: d_K(f, g) = max_{p∈K} ‖f(p) − g(p)‖
- MapFamily: 以 index 參數區分的光滑成員 + 極限映射 + 探測 box
- verify_family: 每個取樣的 n 檢查 Poisson map 殘差，並列出 d_K(φ_n, φ)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from poissonlab.core.errors import MemberNotPoissonError
from poissonlab.core.protocols import EvaluableMap
from poissonlab.core.run_config import LabDefaults
from poissonlab.poisson.chart import Chart
from poissonlab.poisson.checks import poisson_map_check
from poissonlab.poisson.structure import PoissonStructure
from poissonlab.utils.logger import get_logger
from poissonlab.utils.parallel import parallel_map

from .maps import SmoothMap

_logger = get_logger("c0lab.family")

COMPACT_NODES = 21


def c0_distance(f: EvaluableMap, g: EvaluableMap, points: np.ndarray | Sequence[Sequence[float]]) -> float:
    """在探測點上的最大 Euclidean 距離；空點集為 0。"""
    worst = 0.0
    for p in points:
        worst = max(worst, float(np.linalg.norm(f.evaluate(p) - g.evaluate(p))))
    return worst


@dataclass(frozen=True)
class MapFamily:
    """
    映射族

    - members: 含 index_param 的 SmoothMap；member(n) 綁定參數
    - limit: 極限映射（只求值）
    - compacts: 探測 box K（每個成員的 domain 必須包含它們）
    - indices: 取樣的 n（預設 10¹…10⁶）
    - tolerance: 最後一個 n 的 d_K 上限
    """

    members: SmoothMap
    limit: EvaluableMap
    compacts: tuple[Chart, ...]
    index_param: str = "n"
    indices: tuple[float, ...] = LabDefaults.FAMILY_INDICES
    tolerance: float = 1e-2
    compact_nodes: int = COMPACT_NODES

    def __post_init__(self) -> None:
        if self.index_param not in self.members.params:
            raise ValueError(f"成員沒有參數 {self.index_param!r}")
        domain = self.members.domain
        if domain is not None:
            for box in self.compacts:
                if not (domain.contains(box.lower) and domain.contains(box.upper)):
                    raise ValueError(f"探測 box {box} 超出成員的 domain")

    def member(self, n: float) -> SmoothMap:
        return self.members.with_params(**{self.index_param: float(n)})

    def probe_points(self) -> np.ndarray:
        """所有探測 box 的格點（spacing 約 0.1）。"""
        if not self.compacts:
            return np.zeros((0, len(self.members.coords)))
        return np.vstack([box.grid(self.compact_nodes).points for box in self.compacts])


@dataclass(frozen=True)
class FamilyReport:
    """verify_family 的結果（每個 n 一列）。"""

    indices: tuple[float, ...]
    residuals: tuple[float, ...]
    distances: tuple[float, ...]
    tolerance: float
    notes: list[str] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        d = self.distances
        return all(later <= earlier * (1.0 + 1e-12) + 1e-15 for earlier, later in zip(d, d[1:]))

    @property
    def converged(self) -> bool:
        return bool(self.distances) and self.distances[-1] <= self.tolerance

    @property
    def passed(self) -> bool:
        return self.monotone and self.converged


def verify_family(
    source: PoissonStructure,
    family: MapFamily,
    probes: Sequence[Sequence[float]],
    target: PoissonStructure | None = None,
    residual_tol: float = LabDefaults.POISSON_RESIDUAL_TOL,
    threads: int = 1,
) -> FamilyReport:
    """
    逐個 n 檢查成員是 Poisson map，並計算 d_K(φ_n, φ)

    Raises:
        MemberNotPoissonError: 某成員在某探測點殘差超過 residual_tol
    """
    target = target if target is not None else source
    points = family.probe_points()

    def check(n: float) -> tuple[float, float]:
        member = family.member(n)
        worst = 0.0
        for p in probes:
            residual = poisson_map_check(source, target, member, p)
            if residual > residual_tol:
                raise MemberNotPoissonError(n, p, residual)
            worst = max(worst, residual)
        return worst, c0_distance(member, family.limit, points)

    results = parallel_map(check, list(family.indices), threads)
    report = FamilyReport(
        indices=tuple(family.indices),
        residuals=tuple(r for r, _ in results),
        distances=tuple(d for _, d in results),
        tolerance=family.tolerance,
    )
    if not report.monotone:
        report.notes.append("d_K 沿取樣的 n 不是遞減")
    _logger.debug(f"族驗證：距離 {report.distances}，最大殘差 {max(report.residuals, default=0.0):.3e}")
    return report

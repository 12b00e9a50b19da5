"""
Hameotopy：光滑 Hamiltonian flow 族的 C0 收斂

run_hameotopy 對每個取樣的 n 從每個種子積分 H_n 的 flow 到時間 t，
列出相鄰 n 之間的 C0 差距；最大 n 的終點作為極限 flow 的估計，
有封閉形式極限時一併比較。

casimir_hameotopy_check 比較兩件事：極限 H 是否在葉上為常數，
以及 hameotopy 是否為恆等映射；兩者應同真同假。
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from poissonlab.core.protocols import ClosedFormFlowProtocol, DifferentiableScalar
from poissonlab.core.run_config import LabDefaults
from poissonlab.flows.integrator import FlowSpec, integrate
from poissonlab.poisson.chart import Chart
from poissonlab.poisson.structure import PoissonStructure
from poissonlab.utils.logger import get_logger
from poissonlab.utils.parallel import parallel_map

_logger = get_logger("c0lab.hameotopy")


@dataclass(frozen=True)
class HameotopyFamily:
    """
    Hamiltonian 族 H_n(t, ·)

    - hamiltonian: 含 index_param（與可選 time_param）的 H
    - limit_hamiltonian: 連續的極限 H（只求值）
    - support: 宣告的支撐 box；種子必須落在其中
    """

    hamiltonian: DifferentiableScalar
    support: Chart
    limit_hamiltonian: DifferentiableScalar | None = None
    index_param: str = "n"
    time_param: str | None = None
    indices: tuple[float, ...] = LabDefaults.FAMILY_INDICES

    def __post_init__(self) -> None:
        if self.index_param not in self.hamiltonian.params:
            raise ValueError(f"Hamiltonian 沒有參數 {self.index_param!r}")
        if self.time_param is not None and self.time_param not in self.hamiltonian.params:
            raise ValueError(f"Hamiltonian 沒有時間參數 {self.time_param!r}")

    def spec(self, n: float, t: float, step: float = LabDefaults.FLOW_STEP) -> FlowSpec:
        return FlowSpec.for_time(
            self.hamiltonian, t, step=step, time_param=self.time_param,
            params={self.index_param: float(n)},
        )


@dataclass(frozen=True, eq=False)
class HameotopyReport:
    """
    - endpoints: (len(indices), len(seeds), dim) 的終點
    - gaps: 相鄰 n 之間 max_seed ‖φ_{n_k}(p) − φ_{n_{k+1}}(p)‖
    - closed_form_error: 最大 n 與封閉形式極限的最大距離（未提供時為 None）
    """

    indices: tuple[float, ...]
    t: float
    endpoints: np.ndarray
    gaps: tuple[float, ...]
    closed_form_error: float | None = None

    @property
    def limit_points(self) -> np.ndarray:
        return self.endpoints[-1]


def run_hameotopy(
    structure: PoissonStructure,
    family: HameotopyFamily,
    seeds: Sequence[Sequence[float]],
    t: float = 1.0,
    closed_form: ClosedFormFlowProtocol | None = None,
    step: float = LabDefaults.FLOW_STEP,
    threads: int = 1,
) -> HameotopyReport:
    """
    Raises:
        ValueError: 種子不在支撐 box 內
        LeftDomainError: 某條 flow 離開 chart
    """
    points = [np.asarray(p, dtype=float) for p in seeds]
    for p in points:
        if not family.support.contains(p):
            raise ValueError(f"種子 {tuple(p)} 不在支撐 box 內")

    def endpoints_for(n: float) -> np.ndarray:
        spec = family.spec(n, t, step)
        if not points:
            return np.zeros((0, structure.dim))
        return np.array([integrate(structure, spec, p).final for p in points])

    table = np.array(parallel_map(endpoints_for, list(family.indices), threads))
    gaps = tuple(
        float(np.max(np.linalg.norm(table[k + 1] - table[k], axis=1))) if points else 0.0
        for k in range(len(family.indices) - 1)
    )
    error = None
    if closed_form is not None and points:
        expected = np.array([closed_form.evaluate(p, t) for p in points])
        error = float(np.max(np.linalg.norm(table[-1] - expected, axis=1)))
    _logger.debug(f"hameotopy：gaps {gaps}，封閉形式誤差 {error}")
    return HameotopyReport(tuple(family.indices), float(t), table, gaps, error)


# =============================================================================
# Casimir 判準
# =============================================================================

@dataclass(frozen=True)
class CasimirHameotopyReport:
    """
    C0-Hamiltonian 是 Casimir ⇔ 其 hameotopy 是恆等映射

    - casimir_defect: 極限 H 在同一葉樣本上的最大變化量
    - displacement: 最大 n 的 flow 終點與種子的最大距離（所有 t）
    """

    casimir_defect: float
    displacement: float
    tol: float
    times: tuple[float, ...]

    @property
    def is_casimir(self) -> bool:
        return self.casimir_defect <= self.tol

    @property
    def is_identity(self) -> bool:
        return self.displacement <= self.tol

    @property
    def consistent(self) -> bool:
        return self.is_casimir == self.is_identity


def casimir_hameotopy_check(
    structure: PoissonStructure,
    family: HameotopyFamily,
    leaf_groups: Sequence[np.ndarray],
    seeds: Sequence[Sequence[float]],
    times: Sequence[float] = (1.0,),
    step: float = LabDefaults.FLOW_STEP,
    threads: int = 1,
    tol: float = 1e-6,
) -> CasimirHameotopyReport:
    """
    leaf_groups 的每一組是同一片葉上的點（見 leaf_samples）。
    極限 H 在每組上應為常數（time_param 存在時，對每個 t 分別比較）。

    Raises:
        ValueError: 族沒有 limit_hamiltonian，或種子不在支撐 box 內
        LeftDomainError: 某條 flow 離開 chart
    """
    limit = family.limit_hamiltonian
    if limit is None:
        raise ValueError("Casimir 判準需要極限 Hamiltonian")
    stamps = tuple(float(t) for t in times)
    param_sets = [{family.time_param: t} for t in stamps] if family.time_param is not None else [{}]

    defect = 0.0
    for group in leaf_groups:
        if len(group) < 2:
            continue
        for params in param_sets:
            values = [limit.eval(q, params) for q in group]
            defect = max(defect, float(max(values) - min(values)))

    points = np.array([np.asarray(p, dtype=float) for p in seeds])
    displacement = 0.0
    for t in stamps:
        report = run_hameotopy(structure, family, points, t=t, step=step, threads=threads)
        if len(points):
            displacement = max(displacement, float(np.max(np.linalg.norm(report.limit_points - points, axis=1))))
    _logger.debug(f"Casimir 判準：葉上變化 {defect:.3e}，位移 {displacement:.3e}")
    return CasimirHameotopyReport(defect, displacement, tol, stamps)

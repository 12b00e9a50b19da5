"""
Poisson 結構的數值檢查

- jacobiator: {f,{g,h}} + {g,{h,f}} + {h,{f,g}}；內層 bracket 的梯度用中央差分
- poisson_map_check: ‖J Π_src Jᵀ − Π_dst(φ(p))‖_max
- lower_semicontinuity_check: 葉維度下半連續性的網格檢查
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from poissonlab.core.errors import OddRankError
from poissonlab.core.protocols import DifferentiableMap, DifferentiableScalar
from poissonlab.core.run_config import LabDefaults
from poissonlab.utils.logger import get_logger

from .structure import PoissonStructure, antisymmetric_pairing

_logger = get_logger("poisson.checks")


# =============================================================================
# Jacobiator
# =============================================================================

def _raw_bracket(
    structure: PoissonStructure, f: DifferentiableScalar, g: DifferentiableScalar, q: np.ndarray
) -> float:
    return antisymmetric_pairing(structure.raw_matrix(q), f.grad(q), g.grad(q))


def _bracket_gradient(
    structure: PoissonStructure,
    f: DifferentiableScalar,
    g: DifferentiableScalar,
    p: np.ndarray,
    step: float,
) -> np.ndarray:
    """∇{f, g}(p)，中央差分（內層 bracket 每點都是精確一階導數）。"""
    grad = np.empty(structure.dim)
    for k in range(structure.dim):
        offset = np.zeros(structure.dim)
        offset[k] = step
        forward = _raw_bracket(structure, f, g, p + offset)
        backward = _raw_bracket(structure, f, g, p - offset)
        grad[k] = (forward - backward) / (2.0 * step)
    return grad


def jacobiator(
    structure: PoissonStructure,
    f: DifferentiableScalar,
    g: DifferentiableScalar,
    h: DifferentiableScalar,
    p: Sequence[float],
    step: float = LabDefaults.FD_STEP,
) -> float:
    """
    Jacobi 恆等式殘差 {f,{g,h}} + {g,{h,f}} + {h,{f,g}} 在 p 的值

    真正的 Poisson 結構上約為 1e-10 量級（差分誤差），檢查容差 1e-8。
    """
    point = structure.chart.require(p)
    matrix = structure.raw_matrix(point)
    total = 0.0
    for outer, a, b in ((f, g, h), (g, h, f), (h, f, g)):
        inner_grad = _bracket_gradient(structure, a, b, point, step)
        total += antisymmetric_pairing(matrix, outer.grad(point), inner_grad)
    return total


# =============================================================================
# Poisson map
# =============================================================================

def poisson_map_check(
    source: PoissonStructure,
    target: PoissonStructure,
    phi: DifferentiableMap,
    p: Sequence[float],
) -> float:
    """
    Poisson map 殘差 ‖J·Π_src(p)·Jᵀ − Π_dst(φ(p))‖_max，J = Dφ(p)

    Raises:
        OutOfDomainError: p 或 φ(p) 不在各自的 chart 內
    """
    point = source.chart.require(p)
    jac = np.asarray(phi.jacobian(point), dtype=float)
    pushed = jac @ source.raw_matrix(point) @ jac.T
    image = target.matrix_at(phi.evaluate(point))
    return float(np.max(np.abs(pushed - image))) if pushed.size else 0.0


# =============================================================================
# 下半連續性
# =============================================================================

@dataclass
class SemicontinuityReport:
    """
    下半連續性檢查結果

    - checked: 檢查的格點數
    - violations: 沿某方向最終秩仍小於 rank(p) 的格點
    - settle_index: 所有方向中「此後秩 ≥ rank(p)」成立的最大起始 k
    """

    checked: int = 0
    violations: list[tuple[float, ...]] = field(default_factory=list)
    settle_index: int = 0

    @property
    def passed(self) -> bool:
        return not self.violations


def semicontinuity_directions(dim: int, count: int = 8, seed: int = 0) -> np.ndarray:
    """固定的單位方向（同一 dim 與 seed 永遠相同）。"""
    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((count, dim))
    return directions / np.linalg.norm(directions, axis=1, keepdims=True)


def lower_semicontinuity_check(
    structure: PoissonStructure,
    points: np.ndarray,
    radius: float = 0.1,
    levels: int = 10,
    directions: np.ndarray | None = None,
    tol_rank: float = LabDefaults.TOL_RANK,
) -> SemicontinuityReport:
    """
    對每個格點 p 與每個方向 δ，檢查半徑 r_k = 2^{-k}·radius（k = 0..levels）
    的擾動點最終滿足 rank ≥ rank(p)。

    出界的擾動點略過；奇數秩視為違規。
    """
    if directions is None:
        directions = semicontinuity_directions(structure.dim)
    radii = radius * 0.5 ** np.arange(levels + 1)
    report = SemicontinuityReport()

    for p in np.atleast_2d(points):
        base = structure.rank_at(p, tol_rank)
        report.checked += 1
        for delta in directions:
            ok = []
            for r in radii:
                q = p + r * delta
                if not structure.chart.contains(q):
                    continue
                try:
                    ok.append(structure.rank_at(q, tol_rank) >= base)
                except OddRankError:
                    ok.append(False)
            if not ok:
                continue
            if not ok[-1]:
                report.violations.append(tuple(float(v) for v in p))
                _logger.debug(f"下半連續性違規：p={tuple(p)} δ={tuple(delta)}")
                break
            settle = len(ok)
            while settle > 0 and ok[settle - 1]:
                settle -= 1
            report.settle_index = max(report.settle_index, settle)
    return report

"""
Coisotropy 與特徵葉層 (characteristic foliation)

- is_coisotropic_at: max_{a<b} |{F_a, F_b}(p)| ≤ tol（附 witness）
- characteristic_data: K_C 在 p 的生成向量 Π^♯(dF_a) 與其數值秩
- trace_characteristic_leaf: 沿 X_{F_a} 的弧長參數化積分，每 10 步重新投影回 C
- vanishing_ideal_bracket_check: I(C) 對 bracket 封閉的抽樣檢查
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from poissonlab.core.errors import LeftDomainError, NotVanishingError, ProjectionError
from poissonlab.core.protocols import DifferentiableScalar
from poissonlab.core.run_config import LabDefaults
from poissonlab.flows.integrator import Trajectory
from poissonlab.poisson.structure import PoissonStructure, antisymmetric_pairing
from poissonlab.utils.linalg import singular_values
from poissonlab.utils.logger import get_logger

from .submanifold import Submanifold

_logger = get_logger("coiso.characteristic")

VANISHING_TOL = 1e-9
TRACE_ARC_STEP = 1e-2


# =============================================================================
# Coisotropy
# =============================================================================

@dataclass(frozen=True)
class CoisotropyResult:
    """coisotropy 判定：bool 值即結論；pair / value 為最大 |{F_a, F_b}| 的 witness。"""

    coisotropic: bool
    pair: tuple[int, int]
    value: float

    def __bool__(self) -> bool:
        return self.coisotropic


def defining_brackets(structure: PoissonStructure, manifold: Submanifold, p: Sequence[float]) -> np.ndarray:
    """k × k 矩陣 B_ab = {F_a, F_b}(p)。"""
    matrix = structure.matrix_at(p)
    grads = manifold.jacobian(p)
    k = grads.shape[0]
    brackets = np.zeros((k, k))
    for a in range(k):
        for b in range(a + 1, k):
            value = antisymmetric_pairing(matrix, grads[a], grads[b])
            brackets[a, b] = value
            brackets[b, a] = -value
    return brackets


def is_coisotropic_at(
    structure: PoissonStructure,
    manifold: Submanifold,
    p: Sequence[float],
    tol: float = LabDefaults.COISO_TOL,
) -> CoisotropyResult:
    """
    Raises:
        NotOnSubmanifoldError: p 不在 C 上
    """
    point = manifold.require_on(p)
    brackets = defining_brackets(structure, manifold, point)
    k = brackets.shape[0]
    if k == 1:
        return CoisotropyResult(True, (0, 0), 0.0)
    magnitudes = np.abs(brackets)
    a, b = np.unravel_index(int(np.argmax(np.triu(magnitudes, 1))), magnitudes.shape)
    value = float(magnitudes[a, b])
    return CoisotropyResult(value <= tol, (int(a), int(b)), value)


# =============================================================================
# 特徵資料
# =============================================================================

@dataclass(frozen=True, eq=False)
class CharacteristicData:
    """
    K_C 在 basepoint 的資料

    - spanning: n × k，第 a 欄為 Π^♯(dF_a)
    - dim: spanning 的數值秩
    - threshold: 判定秩用的門檻
    """

    basepoint: np.ndarray
    spanning: np.ndarray
    dim: int
    threshold: float


def characteristic_data(
    structure: PoissonStructure,
    manifold: Submanifold,
    p: Sequence[float],
    tol_rank: float = LabDefaults.TOL_RANK,
) -> CharacteristicData:
    """
    生成向量 Π^♯(dF_a) 與數值秩

    門檻為 max(tol_rank·σ_max(Π)·max‖dF_a‖, 1e-12)，與 spanning 自身的 σ_max 無關。
    """
    point = manifold.require_on(p)
    matrix = structure.matrix_at(point)
    grads = manifold.jacobian(point)
    spanning = matrix.T @ grads.T
    sigma = singular_values(matrix)
    scale = (float(sigma[0]) if sigma.size else 0.0) * float(np.max(np.linalg.norm(grads, axis=1)))
    threshold = max(tol_rank * scale, LabDefaults.RANK_FLOOR)
    s = singular_values(spanning)
    dim = int(np.count_nonzero(s >= threshold)) if s.size else 0
    return CharacteristicData(basepoint=point, spanning=spanning, dim=dim, threshold=threshold)


# =============================================================================
# 特徵葉追蹤
# =============================================================================

def _unit_field(
    structure: PoissonStructure, grad_fn, q: np.ndarray, floor: float
) -> np.ndarray | None:
    field = structure.raw_matrix(q).T @ grad_fn(q)
    norm = float(np.linalg.norm(field))
    if norm <= floor:
        return None
    return field / norm


def _trace_direction(
    structure: PoissonStructure,
    manifold: Submanifold,
    generator: DifferentiableScalar,
    start: np.ndarray,
    arc_length: float,
    arc_step: float,
    sign: float,
    floor: float,
    reproject_every: int,
    arcs: list[float],
    points: list[np.ndarray],
    arc_offset: float,
) -> tuple[np.ndarray, float]:
    """沿 ±X_F/‖X_F‖ 積分 arc_length，結果附加到 arcs/points；回傳 (終點, 最大 drift)。"""
    chart = structure.chart
    p = start
    drift = 0.0
    travelled = 0.0
    steps = 0

    def direction(q: np.ndarray) -> np.ndarray | None:
        unit = _unit_field(structure, generator.grad, q, floor)
        return None if unit is None else sign * unit

    while travelled < arc_length - 1e-15:
        ds = min(arc_step, arc_length - travelled)
        k1 = direction(p)
        if k1 is None:
            break
        k2 = direction(p + 0.5 * ds * k1)
        k3 = direction(p + 0.5 * ds * k2) if k2 is not None else None
        k4 = direction(p + ds * k3) if k3 is not None else None
        if k2 is None or k3 is None or k4 is None:
            break
        candidate = p + (ds / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        steps += 1
        if steps % reproject_every == 0:
            try:
                projected = manifold.project_to(candidate)
            except ProjectionError as exc:
                partial = Trajectory(np.array(arcs), np.array(points), drift)
                raise ProjectionError(f"特徵葉追蹤的重新投影失敗：{exc}", exc.residuals, partial) from exc
            drift = max(drift, float(np.linalg.norm(projected - candidate)))
            candidate = projected
        if not chart.contains(candidate):
            partial = Trajectory(np.array(arcs), np.array(points), drift)
            raise LeftDomainError(candidate, partial)
        travelled += ds
        p = candidate
        arcs.append(arc_offset + sign * travelled)
        points.append(p)
    return p, drift


def trace_characteristic_leaf(
    structure: PoissonStructure,
    manifold: Submanifold,
    p: Sequence[float],
    arc_budget: float = 1.0,
    arc_step: float = TRACE_ARC_STEP,
    reproject_every: int = LabDefaults.REPROJECT_EVERY,
    tol_rank: float = LabDefaults.TOL_RANK,
) -> Trajectory:
    """
    追蹤通過 p 的特徵葉

    - k = 1：沿 X_F 兩個方向各走 arc_budget/2，times 為帶號弧長
    - k > 1：依序沿每個 X_{F_a} 走 arc_budget/k，times 為累積弧長
    - 特徵維度為 0 或 X 消失：停在原地

    Raises:
        LeftDomainError: 軌跡離開 chart（error.partial 為部分軌跡）
        ProjectionError: 重新投影失敗（error.partial 為部分軌跡）
    """
    data = characteristic_data(structure, manifold, p, tol_rank)
    start = data.basepoint
    if data.dim == 0:
        return Trajectory(np.array([0.0]), np.array([start]))

    floor = data.threshold
    generators = manifold.defining
    if len(generators) == 1:
        back_arcs: list[float] = [0.0]
        back_points: list[np.ndarray] = [start]
        _, back_drift = _trace_direction(
            structure, manifold, generators[0], start, 0.5 * arc_budget, arc_step, -1.0,
            floor, reproject_every, back_arcs, back_points, 0.0,
        )
        arcs = back_arcs[::-1]
        points = back_points[::-1]
        _, drift = _trace_direction(
            structure, manifold, generators[0], start, 0.5 * arc_budget, arc_step, 1.0,
            floor, reproject_every, arcs, points, 0.0,
        )
        return Trajectory(np.array(arcs), np.array(points), max(back_drift, drift))

    arcs = [0.0]
    points = [start]
    current = start
    total_drift = 0.0
    share = arc_budget / len(generators)
    for generator in generators:
        current, drift = _trace_direction(
            structure, manifold, generator, current, share, arc_step, 1.0,
            floor, reproject_every, arcs, points, arcs[-1],
        )
        total_drift = max(total_drift, drift)
    return Trajectory(np.array(arcs), np.array(points), total_drift)


# =============================================================================
# 消失理想
# =============================================================================

def vanishing_ideal_bracket_check(
    structure: PoissonStructure,
    manifold: Submanifold,
    f: DifferentiableScalar,
    g: DifferentiableScalar,
    probes: Sequence[Sequence[float]],
    vanish_tol: float = VANISHING_TOL,
) -> float:
    """
    max_p |{f, g}(p)|，p 走過 C 上的探測點

    Raises:
        NotVanishingError: f 或 g 在某個探測點不為零
    """
    worst = 0.0
    for p in probes:
        for name, h in (("f", f), ("g", g)):
            value = h.eval(p)
            if abs(value) > vanish_tol:
                raise NotVanishingError(f"{name} 在 {tuple(p)} 不為零：{value:.3e}", p, value)
        worst = max(worst, abs(structure.bracket(f, g, p)))
    _logger.debug(f"vanishing ideal 檢查：{len(probes)} 點，最大 |{{f,g}}| = {worst:.3e}")
    return worst

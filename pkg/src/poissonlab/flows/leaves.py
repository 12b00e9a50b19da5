"""
葉的探索

- leaf_dim_map: 網格上每個節點的葉維度（rank）
- same_leaf_probe: 兩點是否在同一個葉上（same / different / inconclusive）

same_leaf_probe 只用座標 Hamiltonian 這個有限生成族做貪婪搜尋，
所以 inconclusive 是誠實的第三種結論，不是失敗。
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal, Sequence

import numpy as np

from poissonlab.core.errors import PoissonLabError
from poissonlab.core.run_config import LabDefaults
from poissonlab.poisson.chart import Grid
from poissonlab.poisson.structure import PoissonStructure
from poissonlab.utils.logger import get_logger
from poissonlab.utils.parallel import parallel_map

if TYPE_CHECKING:
    from poissonlab.clean.atlas import LeafAtlas

_logger = get_logger("flows.leaves")

LeafVerdict = Literal["same", "different", "inconclusive"]

INVARIANT_TOL = 1e-6
PROBE_SUBSTEPS = 8
MAX_HALVINGS = 30


def leaf_dim_map(
    structure: PoissonStructure,
    grid: Grid,
    tol_rank: float = LabDefaults.TOL_RANK,
    threads: int = 1,
) -> np.ndarray:
    """每個格點的 rank_at，形狀為 grid.shape。"""
    ranks = parallel_map(lambda p: structure.rank_at(p, tol_rank), list(grid.points), threads)
    return np.array(ranks, dtype=int).reshape(grid.shape)


@dataclass(frozen=True)
class LeafProbe:
    """same_leaf_probe 的結果：verdict、最後距離、使用的向量場求值次數、原因。"""

    verdict: LeafVerdict
    distance: float
    evaluations: int
    reason: str = ""


def _coordinate_flow(
    structure: PoissonStructure, k: int, x: np.ndarray, t: float
) -> np.ndarray:
    """座標 Hamiltonian x_k 的 flow（X = Π 第 k 列），RK4 固定 substeps。"""
    dt = t / PROBE_SUBSTEPS
    p = x
    for _ in range(PROBE_SUBSTEPS):
        k1 = structure.raw_matrix(p)[k]
        k2 = structure.raw_matrix(p + 0.5 * dt * k1)[k]
        k3 = structure.raw_matrix(p + 0.5 * dt * k2)[k]
        k4 = structure.raw_matrix(p + dt * k3)[k]
        p = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return p


def same_leaf_probe(
    structure: PoissonStructure,
    atlas: "LeafAtlas",
    p: Sequence[float],
    q: Sequence[float],
    budget: int = LabDefaults.PROBE_BUDGET,
    reach: float = LabDefaults.PROBE_REACH,
    tol_rank: float = LabDefaults.TOL_RANK,
) -> LeafProbe:
    """
    判斷 p 與 q 是否在同一個葉上

    - different：atlas 區域或不變量不同（超過 1e-6），或 rank 不同，或葉是單點
    - same：貪婪的座標 Hamiltonian flow 組合在 budget 內走到 q 的 reach 範圍
    - inconclusive：其餘情況
    """
    chart = structure.chart
    try:
        start = chart.require(p)
        goal = chart.require(q)
    except PoissonLabError as exc:
        return LeafProbe("inconclusive", float("nan"), 0, f"點不在定義域內：{exc}")

    gap = float(np.linalg.norm(goal - start))
    if gap <= reach:
        return LeafProbe("same", gap, 0, "兩點重合")

    region_p, region_q = atlas.region_of(start), atlas.region_of(goal)
    if region_p is None or region_q is None:
        return LeafProbe("inconclusive", gap, 0, "點不在任何 atlas 區域內")
    if region_p.name != region_q.name:
        return LeafProbe("different", gap, 0, f"區域不同：{region_p.name} / {region_q.name}")
    for invariant in region_p.invariants:
        delta = abs(invariant.eval(start) - invariant.eval(goal))
        if delta > INVARIANT_TOL:
            return LeafProbe("different", gap, 0, f"不變量相差 {delta:.3e}")
    rank = structure.rank_at(start, tol_rank)
    if rank != structure.rank_at(goal, tol_rank):
        return LeafProbe("different", gap, 0, "rank 不同")
    if rank == 0:
        return LeafProbe("different", gap, 0, "葉為單點")

    x = start
    evaluations = 0
    cost = 4 * PROBE_SUBSTEPS
    while evaluations + cost <= budget:
        delta = goal - x
        distance = float(np.linalg.norm(delta))
        if distance <= reach:
            return LeafProbe("same", distance, evaluations)

        matrix = structure.raw_matrix(x)
        evaluations += 1
        best: tuple[float, int, float] | None = None
        for k in range(structure.dim):
            field = matrix[k]
            norm2 = float(field @ field)
            if norm2 == 0.0:
                continue
            t = float(field @ delta) / norm2
            predicted = float(np.linalg.norm(delta - t * field))
            if best is None or predicted < best[0]:
                best = (predicted, k, t)
        if best is None:
            break

        _, k, t = best
        moved = False
        for _ in range(MAX_HALVINGS):
            if evaluations + cost > budget:
                break
            candidate = _coordinate_flow(structure, k, x, t)
            evaluations += cost
            if chart.contains(candidate) and np.linalg.norm(goal - candidate) < distance:
                x = candidate
                moved = True
                break
            t *= 0.5
        if not moved:
            break

    distance = float(np.linalg.norm(goal - x))
    if distance <= reach:
        return LeafProbe("same", distance, evaluations)
    _logger.debug(f"same_leaf_probe 未達目標：距離 {distance:.3e}，求值 {evaluations} 次")
    return LeafProbe("inconclusive", distance, evaluations, "貪婪搜尋未抵達")

"""
C0 極限映射的幾何分析

- leaf_mapping_check: 極限映射把同一片葉的樣本送到同一片葉，且保持葉維度
- leafwise_symplectic_check: 光滑成員在葉上拉回 ω_L
- char_leaf_image_analysis: 特徵葉的像是否落在目標子流形上，以及特徵維度的下降/跳升
- c0_char_partition_probe: 在 C 上以 C0-Hamiltonian 極限 flow 生成的等價類樣本
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from poissonlab.clean.atlas import LeafAtlas
from poissonlab.coiso.characteristic import characteristic_data, trace_characteristic_leaf
from poissonlab.coiso.submanifold import Submanifold
from poissonlab.core.errors import (
    DomainError,
    ImageOffTargetError,
    LeftDomainError,
    NotVanishingError,
    OffSubmanifoldError,
    PoissonLabError,
    ProjectionError,
)
from poissonlab.core.protocols import ClosedFormFlowProtocol, DifferentiableMap, DifferentiableScalar, EvaluableMap
from poissonlab.core.run_config import LabDefaults
from poissonlab.poisson.structure import PoissonStructure
from poissonlab.utils.linalg import pca_dimension, pca_spectrum
from poissonlab.utils.logger import get_logger

_logger = get_logger("c0lab.analysis")

LEAF_TOL = 1e-6
DEDUP_SCALE = 1e-9


# =============================================================================
# 葉的映射
# =============================================================================

@dataclass(frozen=True)
class LeafMappingReport:
    """每組樣本（同一來源葉）的違規紀錄；violations 為空即通過。"""

    groups: int
    max_deviation: float
    violations: list[tuple[int, str]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def leaf_samples(
    atlas: LeafAtlas,
    seeds: Sequence[Sequence[float]],
    rng: np.random.Generator,
    count: int = 6,
    spread: float = 0.1,
) -> list[np.ndarray]:
    """每個種子沿其所在的葉取樣，形成一組。"""
    return [atlas.sample_leaf(p, rng, count, spread) for p in seeds]


def leaf_mapping_check(
    limit: EvaluableMap,
    atlas: LeafAtlas,
    groups: Sequence[np.ndarray],
    target_atlas: LeafAtlas | None = None,
    tol: float = LEAF_TOL,
) -> LeafMappingReport:
    """
    對每組樣本：來源同葉 → 像的 atlas 區域一致、invariants 差 ≤ tol、葉維度相同。
    """
    target_atlas = target_atlas if target_atlas is not None else atlas
    source, target = atlas.structure, target_atlas.structure
    worst = 0.0
    violations: list[tuple[int, str]] = []
    for k, group in enumerate(groups):
        try:
            images = np.array([limit.evaluate(p) for p in group])
        except PoissonLabError as exc:
            violations.append((k, f"像無法求值：{exc}"))
            continue
        if not all(target.chart.contains(q) for q in images):
            violations.append((k, "像離開目標 chart"))
            continue
        keys = [target_atlas.leaf_key(q) for q in images]
        if any(key is None for key in keys):
            violations.append((k, "像不在任何 atlas 區域"))
            continue
        regions = {key[0] for key in keys if key is not None}
        if len(regions) > 1:
            violations.append((k, f"像分散在多個區域：{sorted(regions)}"))
            continue
        values = np.array([key[1] for key in keys if key is not None])
        if values.size:
            deviation = float(np.max(values.max(axis=0) - values.min(axis=0)))
            worst = max(worst, deviation)
            if deviation > tol:
                violations.append((k, f"像的 invariants 相差 {deviation:.3e}"))
                continue
        source_ranks = {source.rank_at(p, atlas.tol_rank) for p in group}
        image_ranks = {target.rank_at(q, target_atlas.tol_rank) for q in images}
        if source_ranks != image_ranks:
            violations.append((k, f"葉維度 {sorted(source_ranks)} → {sorted(image_ranks)}"))
    return LeafMappingReport(len(groups), worst, violations)


# =============================================================================
# 葉上的辛形式
# =============================================================================

def leafwise_symplectic_check(
    structure: PoissonStructure,
    members: Sequence[DifferentiableMap],
    probes: Sequence[Sequence[float]],
    target: PoissonStructure | None = None,
    pairs: Sequence[tuple[Sequence[float], Sequence[float]]] | None = None,
    tol_rank: float = LabDefaults.TOL_RANK,
) -> float:
    """
    max |ω_L'(dφ·u, dφ·v) − ω_L(u, v)|

    pairs 未提供時取 T_pL 正交基底的所有 (e_a, e_b), a < b。

    Raises:
        NotInLeafError: dφ·u 不在像點的葉切空間內
    """
    target = target if target is not None else structure
    worst = 0.0
    for member in members:
        for p in probes:
            point = structure.chart.require(p)
            if pairs is None:
                basis = structure.leaf_tangent_basis(point, tol_rank)
                vectors = [
                    (basis[:, a], basis[:, b])
                    for a in range(basis.shape[1])
                    for b in range(a + 1, basis.shape[1])
                ]
            else:
                vectors = [(np.asarray(u, dtype=float), np.asarray(v, dtype=float)) for u, v in pairs]
            if not vectors:
                continue
            jac = member.jacobian(point)
            image = member.evaluate(point)
            for u, v in vectors:
                before = structure.leafwise_form(point, u, v, tol_rank)
                after = target.leafwise_form(image, jac @ u, jac @ v, tol_rank)
                worst = max(worst, abs(after - before))
    return worst


# =============================================================================
# 特徵葉的像
# =============================================================================

@dataclass(frozen=True)
class LeafImage:
    """一個種子的特徵葉與其像的特徵維度。"""

    seed: tuple[float, ...]
    source_dim: int
    image_dims: tuple[int, ...]
    max_residual: float
    samples: int

    @property
    def drop(self) -> bool:
        return bool(self.image_dims) and min(self.image_dims) < self.source_dim

    @property
    def jump(self) -> bool:
        return bool(self.image_dims) and max(self.image_dims) > self.source_dim


@dataclass(frozen=True)
class CharImageReport:
    leaves: tuple[LeafImage, ...]

    @property
    def drops(self) -> int:
        return sum(1 for leaf in self.leaves if leaf.drop)

    @property
    def jumps(self) -> int:
        return sum(1 for leaf in self.leaves if leaf.jump)

    @property
    def max_residual(self) -> float:
        return max((leaf.max_residual for leaf in self.leaves), default=0.0)


def _trace_points(
    structure: PoissonStructure, manifold: Submanifold, seed: np.ndarray, arc_budget: float
) -> np.ndarray:
    try:
        return trace_characteristic_leaf(structure, manifold, seed, arc_budget=arc_budget).points
    except (LeftDomainError, ProjectionError) as exc:
        partial = exc.partial
        if partial is not None and len(partial) > 0:
            _logger.debug(f"特徵葉追蹤提前停止，使用 {len(partial)} 個部分點")
            return partial.points
        return seed[None, :]


def _on_target(manifold: Submanifold, q: np.ndarray) -> np.ndarray:
    if manifold.residual(q) <= LabDefaults.ON_SUBMANIFOLD_TOL:
        return q
    return manifold.project_to(q)


def char_leaf_image_analysis(
    structure: PoissonStructure,
    source: Submanifold,
    target: Submanifold,
    limit: EvaluableMap,
    seeds: Sequence[Sequence[float]],
    target_structure: PoissonStructure | None = None,
    arc_budget: float = 1.0,
    samples_per_leaf: int = 21,
    image_tol: float = LabDefaults.IMAGE_TOL,
    tol_rank: float = LabDefaults.TOL_RANK,
) -> CharImageReport:
    """
    追蹤每個種子的特徵葉，經極限映射送到目標子流形，比較特徵維度

    像點先驗證 ‖F_dst‖ ≤ image_tol，才做分類。

    Raises:
        ImageOffTargetError: 像點離開目標子流形
    """
    target_structure = target_structure if target_structure is not None else structure
    leaves = []
    for seed in seeds:
        start = source.require_on(seed)
        source_dim = characteristic_data(structure, source, start, tol_rank).dim
        points = _trace_points(structure, source, start, arc_budget)
        if len(points) > samples_per_leaf:
            points = points[np.linspace(0, len(points) - 1, samples_per_leaf).round().astype(int)]
        dims = []
        worst = 0.0
        for q in points:
            image = np.asarray(limit.evaluate(q), dtype=float)
            residual = target.residual(image)
            if residual > image_tol:
                raise ImageOffTargetError(image, residual)
            worst = max(worst, residual)
            dims.append(characteristic_data(target_structure, target, _on_target(target, image), tol_rank).dim)
        leaves.append(LeafImage(tuple(float(v) for v in start), source_dim, tuple(dims), worst, len(points)))
    report = CharImageReport(tuple(leaves))
    _logger.debug(f"特徵葉像分析：{len(leaves)} 葉，drop {report.drops}，jump {report.jumps}")
    return report


# =============================================================================
# C0 特徵分割
# =============================================================================

@dataclass(frozen=True)
class C0Generator:
    """一個 C0-Hamiltonian：極限 flow 與（用於前提驗證的）極限 Hamiltonian。"""

    flow: ClosedFormFlowProtocol
    hamiltonian: DifferentiableScalar | None = None


@dataclass(frozen=True, eq=False)
class PartitionProbe:
    """
    c0_char_partition_probe 的結果

    - cloud: 可達樣本（含起點）
    - leaf_dim: 起點的光滑特徵葉維度
    - cloud_dim: 點雲的 PCA 維度
    - dims_seen: 點雲上出現過的特徵維度
    """

    cloud: np.ndarray
    leaf_dim: int
    cloud_dim: int
    dims_seen: tuple[int, ...]
    max_residual: float

    @property
    def crosses(self) -> bool:
        """點雲是否超出起點的光滑特徵葉（維度更高或跨越不同維度的葉）。"""
        return self.cloud_dim > self.leaf_dim or len(self.dims_seen) > 1


def _check_time_only(
    generator: C0Generator, probes: Sequence[np.ndarray], tol: float
) -> None:
    h = generator.hamiltonian
    if h is None or not probes:
        return
    reference = h.eval(probes[0])
    for q in probes[1:]:
        value = h.eval(q)
        if abs(value - reference) > tol:
            raise NotVanishingError(
                f"極限 Hamiltonian 在 C 上不是常數：{tuple(q)} 與起點相差 {value - reference:.3e}",
                q,
                value - reference,
            )


def c0_char_partition_probe(
    structure: PoissonStructure,
    manifold: Submanifold,
    generators: Sequence[C0Generator],
    p: Sequence[float],
    budget: int = 200,
    times: Sequence[float] = (0.25,),
    probes: Sequence[Sequence[float]] | None = None,
    tol: float = LabDefaults.IMAGE_TOL,
    tol_rank: float = LabDefaults.TOL_RANK,
) -> PartitionProbe:
    """
    以 ±times 的極限 flow 做 BFS，取得 p 的等價類樣本（最多 budget 個）

    Raises:
        NotVanishingError: 某個極限 Hamiltonian 在 C 的探測點上不是常數
        OffSubmanifoldError: 樣本離開 C（前提不成立）
    """
    start = manifold.require_on(p)
    chart = structure.chart
    checkpoints = [start] + [manifold.require_on(q) for q in (probes or ())]
    for generator in generators:
        _check_time_only(generator, checkpoints, tol)

    cloud = [start]
    seen = {tuple(np.round(start / DEDUP_SCALE).astype(np.int64))}
    frontier = [start]
    worst = 0.0
    steps = [s * float(t) for t in times for s in (1.0, -1.0)]
    while frontier and len(cloud) < budget:
        nxt = []
        for point in frontier:
            for generator in generators:
                for t in steps:
                    try:
                        q = np.asarray(generator.flow.evaluate(point, t), dtype=float)
                    except DomainError:
                        continue
                    if not np.all(np.isfinite(q)) or not chart.contains(q):
                        continue
                    residual = manifold.residual(q)
                    if residual > tol:
                        raise OffSubmanifoldError(q, residual)
                    key = tuple(np.round(q / DEDUP_SCALE).astype(np.int64))
                    if key in seen:
                        continue
                    seen.add(key)
                    worst = max(worst, residual)
                    cloud.append(q)
                    nxt.append(q)
                    if len(cloud) >= budget:
                        break
                if len(cloud) >= budget:
                    break
            if len(cloud) >= budget:
                break
        frontier = nxt

    points = np.array(cloud)
    leaf_dim = characteristic_data(structure, manifold, start, tol_rank).dim
    dims = set()
    for q in points:
        try:
            dims.add(characteristic_data(structure, manifold, _on_target(manifold, q), tol_rank).dim)
        except PoissonLabError:
            continue
    cloud_dim = pca_dimension(pca_spectrum(points)) if len(points) > 1 else 0
    _logger.debug(f"C0 分割探測：{len(points)} 樣本，cloud dim {cloud_dim}，特徵維度 {sorted(dims)}")
    return PartitionProbe(points, leaf_dim, cloud_dim, tuple(sorted(dims)), worst)

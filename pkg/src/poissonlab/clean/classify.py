"""
Clean 交點分類

- tangent_leaf_intersection_dim: dim(T_pC ∩ T_pL)，T_pL 一律取 Im Π^♯_p
- intersection_dim_estimate: 從 p 附近的擾動種子 Newton 解 {F = 0, G = G(p)}，
  以 PCA 估計實際交集 C ∩ L 的維度
- classify: Transverse / CleanNonTransverse / NonClean / Undetermined
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Literal, Sequence

import numpy as np

from poissonlab.core.errors import PoissonLabError
from poissonlab.core.run_config import LabDefaults
from poissonlab.coiso.submanifold import Submanifold
from poissonlab.poisson.structure import PoissonStructure
from poissonlab.utils.linalg import numerical_rank, pca_dimension, pca_spectrum
from poissonlab.utils.logger import get_logger

from .atlas import LeafAtlas, LeafRegion

_logger = get_logger("clean.classify")

CleanKind = Literal["transverse", "clean_non_transverse", "non_clean", "undetermined"]
CLEAN_KINDS: tuple[CleanKind, ...] = ("transverse", "clean_non_transverse")

# joint Newton 的收斂條件
NEWTON_MAX_ITER = 100
NEWTON_RESIDUAL = 1e-14
NEWTON_MIN_STEP = 1e-15
ACCEPT_RESIDUAL = 1e-10
ACCEPT_REACH = 3.0


@dataclass(frozen=True)
class TangentData:
    """T_pC 與 T_pL 的維度資訊。"""

    manifold_dim: int
    leaf_dim: int
    sum_dim: int

    @property
    def intersection_dim(self) -> int:
        return self.manifold_dim + self.leaf_dim - self.sum_dim


@dataclass(frozen=True)
class IntersectionEstimate:
    """
    取樣估計的交集維度

    - dim: PCA 維度；收斂點不足時為 None
    - converged: 被接受的種子數
    - spectrum: 正規化後的 PCA 特徵值（遞減）
    """

    dim: int | None
    converged: int
    spectrum: tuple[float, ...] = ()


@dataclass(frozen=True)
class CleanVerdict:
    """
    classify 的結果

    - kind: transverse / clean_non_transverse / non_clean / undetermined
    - tangent_int_dim: dim(T_pC ∩ T_pL)
    - estimated_int_dim: 取樣估計的交集維度（transverse 時不估計，為 None）
    - diagnostics: 樣本數、PCA 譜、半徑與門檻
    """

    kind: CleanKind
    tangent_int_dim: int
    estimated_int_dim: int | None = None
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def is_clean(self) -> bool:
        return self.kind in CLEAN_KINDS


def tangent_data(
    structure: PoissonStructure,
    manifold: Submanifold,
    p: Sequence[float],
    tol_rank: float = LabDefaults.TOL_RANK,
) -> TangentData:
    tangent = manifold.tangent_basis(p)
    leaf = structure.leaf_tangent_basis(p, tol_rank)
    combined = np.hstack([tangent, leaf])
    sum_dim = numerical_rank(combined, tol_rank, LabDefaults.RANK_FLOOR) if combined.size else 0
    return TangentData(tangent.shape[1], leaf.shape[1], sum_dim)


def tangent_leaf_intersection_dim(
    structure: PoissonStructure,
    manifold: Submanifold,
    p: Sequence[float],
    tol_rank: float = LabDefaults.TOL_RANK,
) -> int:
    """dim(ker dF_p ∩ Im Π^♯_p)"""
    return tangent_data(structure, manifold, p, tol_rank).intersection_dim


def _ball_seeds(rng: np.random.Generator, center: np.ndarray, radius: float, count: int) -> np.ndarray:
    directions = rng.standard_normal((count, center.size))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.uniform(0.0, 1.0, count) ** (1.0 / center.size)
    return center + directions * radii[:, None]


def _joint_newton(
    manifold: Submanifold, region: LeafRegion, targets: np.ndarray, seed: np.ndarray
) -> tuple[np.ndarray, float]:
    x = seed.copy()
    residual = float("inf")
    for _ in range(NEWTON_MAX_ITER):
        values = np.concatenate([manifold.values(x), region.invariant_values(x) - targets])
        residual = float(np.max(np.abs(values)))
        if residual <= NEWTON_RESIDUAL:
            break
        jac = manifold.jacobian(x)
        if region.invariants:
            jac = np.vstack([jac, np.vstack([g.grad(x) for g in region.invariants])])
        step, *_ = np.linalg.lstsq(jac, -values, rcond=None)
        x = x + step
        if float(np.max(np.abs(step))) <= NEWTON_MIN_STEP:
            values = np.concatenate([manifold.values(x), region.invariant_values(x) - targets])
            residual = float(np.max(np.abs(values)))
            break
    return x, residual


def intersection_dim_estimate(
    structure: PoissonStructure,
    manifold: Submanifold,
    atlas: LeafAtlas,
    p: Sequence[float],
    rng: np.random.Generator | None = None,
    radius: float = LabDefaults.ESTIMATE_RADIUS,
    n_samples: int = LabDefaults.ESTIMATE_SAMPLES,
    min_converged: int = LabDefaults.ESTIMATE_MIN_CONVERGED,
    threshold: float = LabDefaults.PCA_THRESHOLD,
) -> IntersectionEstimate:
    """
    取樣估計 dim(C ∩ L_p)

    種子在半徑 radius 的球內均勻取樣；被接受的解需滿足殘差 ≤ 1e-10、
    距 p 不超過 3·radius、仍在 chart 內且與 p 同一 atlas 區域。
    """
    point = manifold.require_on(p)
    rng = rng if rng is not None else np.random.default_rng(0)
    region = atlas.region_of(point)
    if region is None:
        return IntersectionEstimate(None, 0)
    targets = region.invariant_values(point)
    chart = manifold.chart

    accepted = []
    for seed in _ball_seeds(rng, point, radius, n_samples):
        try:
            x, residual = _joint_newton(manifold, region, targets, seed)
        except PoissonLabError:
            continue
        if not np.all(np.isfinite(x)) or residual > ACCEPT_RESIDUAL:
            continue
        if np.linalg.norm(x - point) > ACCEPT_REACH * radius or not chart.contains(x):
            continue
        if atlas.region_of(x) is not region:
            continue
        accepted.append(x)

    if len(accepted) < min_converged:
        return IntersectionEstimate(None, len(accepted))
    spectrum = pca_spectrum(np.array(accepted), scale=radius)
    return IntersectionEstimate(
        pca_dimension(spectrum, threshold), len(accepted), tuple(float(v) for v in spectrum)
    )


def classify(
    structure: PoissonStructure,
    manifold: Submanifold,
    atlas: LeafAtlas,
    p: Sequence[float],
    rng: np.random.Generator | None = None,
    tol_rank: float = LabDefaults.TOL_RANK,
    radius: float = LabDefaults.ESTIMATE_RADIUS,
    n_samples: int = LabDefaults.ESTIMATE_SAMPLES,
    threshold: float = LabDefaults.PCA_THRESHOLD,
) -> CleanVerdict:
    """
    分類 C 上的點 p

    - dim(T_pC + T_pL) = n → transverse（不做取樣）
    - 否則比較切空間交集維度與取樣估計：相等 → clean_non_transverse，
      估計較小 → non_clean，無估計 → undetermined
    """
    data = tangent_data(structure, manifold, p, tol_rank)
    tangent_dim = data.intersection_dim
    if data.sum_dim == structure.dim:
        return CleanVerdict("transverse", tangent_dim)

    estimate = intersection_dim_estimate(
        structure, manifold, atlas, p, rng, radius, n_samples, threshold=threshold
    )
    diagnostics: dict[str, Any] = {
        "converged": estimate.converged,
        "samples": n_samples,
        "spectrum": list(estimate.spectrum),
        "radius": radius,
        "threshold": threshold,
    }
    if estimate.dim is None:
        return CleanVerdict("undetermined", tangent_dim, None, diagnostics)
    if estimate.dim == tangent_dim:
        return CleanVerdict("clean_non_transverse", tangent_dim, estimate.dim, diagnostics)
    if estimate.dim < tangent_dim:
        return CleanVerdict("non_clean", tangent_dim, estimate.dim, diagnostics)
    diagnostics["note"] = "估計維度大於切空間交集維度"
    _logger.debug(f"{tuple(p)}: 估計維度 {estimate.dim} > 切空間交集維度 {tangent_dim}")
    return CleanVerdict("undetermined", tangent_dim, estimate.dim, diagnostics)

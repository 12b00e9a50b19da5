"""
葉內的辛幾何檢查

W = T_pC ∩ T_pL，ω_L 為葉上的辛形式。

- leafwise_coisotropy_check: W^{ω_L} ⊆ W（W 在 (T_pL, ω_L) 中為 coisotropic）
- characteristic_kernel: ω_L 限制在 W 上的 radical，W ∩ W^{ω_L}
- characteristic_coincidence: radical 與 span Π^♯(dF_a) 是否為同一子空間
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from poissonlab.core.errors import NotCleanError
from poissonlab.core.run_config import LabDefaults
from poissonlab.coiso.characteristic import characteristic_data
from poissonlab.coiso.submanifold import Submanifold
from poissonlab.poisson.structure import PoissonStructure
from poissonlab.utils.linalg import (
    column_basis,
    intersection_basis,
    principal_angles,
    singular_values,
)

from .classify import CleanVerdict

INCLUSION_TOL = 1e-6
ANGLE_TOL = 1e-6


def _leaf_gram_scale(structure: PoissonStructure, p: np.ndarray, leaf: np.ndarray) -> tuple[np.ndarray, float]:
    gram = structure.leafwise_gram(p, leaf)
    s = singular_values(gram)
    return gram, float(s[0]) if s.size else 0.0


def intersection_space(
    structure: PoissonStructure,
    manifold: Submanifold,
    p: Sequence[float],
    tol_rank: float = LabDefaults.TOL_RANK,
) -> tuple[np.ndarray, np.ndarray]:
    """回傳 (W 的正交基底, T_pL 的正交基底)。"""
    tangent = manifold.tangent_basis(p)
    leaf = structure.leaf_tangent_basis(p, tol_rank)
    return intersection_basis(tangent, leaf, tol_rank), leaf


def leafwise_coisotropy_check(
    structure: PoissonStructure,
    manifold: Submanifold,
    p: Sequence[float],
    verdict: CleanVerdict | None = None,
    tol_rank: float = LabDefaults.TOL_RANK,
    tol: float = INCLUSION_TOL,
) -> bool:
    """
    W^{ω_L} ⊆ W？

    Args:
        verdict: p 的 classify 結果；提供且不是 clean 時拋 NotCleanError

    Raises:
        NotCleanError: verdict 表示 p 不是 clean 點
    """
    if verdict is not None and not verdict.is_clean:
        raise NotCleanError(p, verdict.kind)
    point = manifold.require_on(p)
    w, leaf = intersection_space(structure, manifold, point, tol_rank)
    if leaf.shape[1] == 0:
        return True
    gram, _ = _leaf_gram_scale(structure, point, leaf)
    if w.shape[1] == 0:
        # W = 0 時 W^ω = T_pL
        return False
    # W 在 T_pL 基底下的座標；v = leaf·y 屬於 W^ω ⇔ (gram·c)ᵀ y = 0
    coords = leaf.T @ w
    constraint = (gram @ coords).T
    _u, s, vh = np.linalg.svd(constraint, full_matrices=True)
    threshold = max(tol_rank * (float(s[0]) if s.size else 0.0), LabDefaults.RANK_FLOOR)
    rank = int(np.count_nonzero(s >= threshold))
    complement = leaf @ vh[rank:].T
    if complement.shape[1] == 0:
        return True
    escape = complement - w @ (w.T @ complement)
    return float(np.max(np.linalg.norm(escape, axis=0))) <= tol


def characteristic_kernel(
    structure: PoissonStructure,
    manifold: Submanifold,
    p: Sequence[float],
    tol_rank: float = LabDefaults.TOL_RANK,
) -> np.ndarray:
    """
    ω_L|_W 的 radical（n × d 正交基底）

    門檻以整個 T_pL 上 Gram 矩陣的 σ_max 為尺度。
    """
    point = manifold.require_on(p)
    w, leaf = intersection_space(structure, manifold, point, tol_rank)
    if w.shape[1] == 0:
        return w
    _, scale = _leaf_gram_scale(structure, point, leaf)
    restricted = structure.leafwise_gram(point, w)
    _u, s, vh = np.linalg.svd(restricted, full_matrices=True)
    threshold = max(tol_rank * scale, LabDefaults.RANK_FLOOR)
    rank = int(np.count_nonzero(s >= threshold))
    return column_basis(w @ vh[rank:].T, tol_rank, LabDefaults.RANK_FLOOR)


@dataclass(frozen=True)
class CoincidenceResult:
    """特徵 span 與 radical 的比較：維度與最大主角（sin）。"""

    span_dim: int
    kernel_dim: int
    max_angle: float

    @property
    def coincide(self) -> bool:
        return self.span_dim == self.kernel_dim and self.max_angle <= ANGLE_TOL


def characteristic_coincidence(
    structure: PoissonStructure,
    manifold: Submanifold,
    p: Sequence[float],
    tol_rank: float = LabDefaults.TOL_RANK,
) -> CoincidenceResult:
    """比較 span Π^♯(dF_a) 與 W ∩ W^{ω_L}。"""
    data = characteristic_data(structure, manifold, p, tol_rank)
    if data.dim == 0:
        span = np.zeros((structure.dim, 0))
    else:
        u, s, _vh = np.linalg.svd(data.spanning, full_matrices=False)
        span = u[:, : int(np.count_nonzero(s >= data.threshold))]
    kernel = characteristic_kernel(structure, manifold, p, tol_rank)
    if span.shape[1] != kernel.shape[1]:
        return CoincidenceResult(span.shape[1], kernel.shape[1], 1.0)
    angles = principal_angles(span, kernel)
    return CoincidenceResult(span.shape[1], kernel.shape[1], float(angles.max()) if angles.size else 0.0)

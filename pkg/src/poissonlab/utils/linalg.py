"""
線性代數工具（以 SVD 為核心）

集中管理「數值秩」相關的共用運算，讓 poisson / coiso / clean 使用同一套容差語意：

- numerical_rank: 奇異值 ≥ max(tol·σ_max, floor) 的個數
- column_basis / null_space: 由 SVD 取正交基底
- intersection_basis: 兩個子空間交集的正交基底
- principal_angles: 子空間主角（以 sin 表示）
- pca_dimension: 點雲的 PCA 維度估計
"""

from __future__ import annotations

import numpy as np

# 絕對下限：σ_max 本身小於此值時視為零矩陣
ABSOLUTE_FLOOR = 1e-12


def singular_values(matrix: np.ndarray) -> np.ndarray:
    """回傳奇異值（遞減排序）；空矩陣回傳空陣列。"""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return np.zeros(0)
    return np.linalg.svd(matrix, compute_uv=False)


def rank_threshold(s: np.ndarray, tol: float, floor: float = ABSOLUTE_FLOOR) -> float:
    """由奇異值序列計算秩門檻：max(tol·σ_max, floor)。"""
    if s.size == 0:
        return floor
    return max(tol * float(s[0]), floor)


def numerical_rank(matrix: np.ndarray, tol: float = 1e-8, floor: float = ABSOLUTE_FLOOR) -> int:
    """
    數值秩

    Args:
        matrix: 任意形狀矩陣
        tol: 相對容差（相對於最大奇異值）
        floor: 絕對下限

    Returns:
        int: 奇異值 ≥ max(tol·σ_max, floor) 的個數
    """
    s = singular_values(matrix)
    if s.size == 0:
        return 0
    return int(np.count_nonzero(s >= rank_threshold(s, tol, floor)))


def column_basis(matrix: np.ndarray, tol: float = 1e-8, floor: float = ABSOLUTE_FLOOR) -> np.ndarray:
    """
    欄空間的正交基底（n × r，欄為基底向量）。
    """
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    if matrix.size == 0:
        return np.zeros((n, 0))
    u, s, _vh = np.linalg.svd(matrix, full_matrices=False)
    r = int(np.count_nonzero(s >= rank_threshold(s, tol, floor)))
    return u[:, :r]


def null_space(matrix: np.ndarray, tol: float = 1e-8, floor: float = ABSOLUTE_FLOOR) -> np.ndarray:
    """
    零空間的正交基底（n × (n − r)）。

    matrix 形狀為 (k, n)，回傳的欄向量 v 滿足 matrix @ v ≈ 0。
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    n = matrix.shape[1]
    if matrix.shape[0] == 0:
        return np.eye(n)
    _u, s, vh = np.linalg.svd(matrix, full_matrices=True)
    r = int(np.count_nonzero(s >= rank_threshold(s, tol, floor)))
    return vh[r:].T.copy()


def intersection_basis(a: np.ndarray, b: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """
    兩個子空間交集的正交基底。

    a, b 為正交欄基底（n × p, n × q）。解 a·x = b·y，即 [a, −b] 的零空間，
    再把 a·x 正交化。
    """
    n = a.shape[0]
    if a.shape[1] == 0 or b.shape[1] == 0:
        return np.zeros((n, 0))
    stacked = np.hstack([a, -b])
    kernel = null_space(stacked, tol=tol)
    if kernel.shape[1] == 0:
        return np.zeros((n, 0))
    return column_basis(a @ kernel[: a.shape[1]], tol=tol)


def principal_angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    兩個等維子空間的主角（以 sin θ 表示，遞增排序）。

    a, b 為正交欄基底；任一為空時回傳空陣列。
    """
    if a.shape[1] == 0 or b.shape[1] == 0:
        return np.zeros(0)
    cosines = np.clip(np.linalg.svd(a.T @ b, compute_uv=False), 0.0, 1.0)
    return np.sort(np.sqrt(np.maximum(0.0, 1.0 - cosines**2)))


def pca_spectrum(points: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """
    點雲的 PCA 特徵值（遞減排序），點座標先除以 scale 正規化。
    """
    points = np.asarray(points, dtype=float)
    if points.shape[0] == 0:
        return np.zeros(0)
    centered = (points - points.mean(axis=0)) / scale
    cov = centered.T @ centered / points.shape[0]
    return np.sort(np.linalg.eigvalsh(cov))[::-1]


def pca_dimension(spectrum: np.ndarray, threshold: float = 1e-3, floor: float = 1e-20) -> int:
    """
    由 PCA 特徵值估計維度：特徵值 ≥ threshold·λ_max 的個數；λ_max ≤ floor 時為 0。
    """
    if spectrum.size == 0 or float(spectrum[0]) <= floor:
        return 0
    return int(np.count_nonzero(spectrum >= threshold * float(spectrum[0])))

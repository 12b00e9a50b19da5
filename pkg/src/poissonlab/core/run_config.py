"""
執行設定正規化（Run configuration）

集中管理數值預設值，並把使用者輸入（CLI 旗標或 dict）統一成 RunOverrides。

設計重點：
- 預設值只在 LabDefaults 出現一次，各模組引用同一份常數
- 正規化只處理「輸入形狀」與型別，不做任何數值運算
- 唯一的環境變數是 POISSONLAB_THREADS
"""

from __future__ import annotations

import math
import os
from typing import Any, Mapping, TypedDict

THREADS_ENV = "POISSONLAB_THREADS"


class LabDefaults:
    """數值預設值（可被 scenario 檔或 overrides 覆蓋）"""

    # poisson
    TOL_RANK = 1e-8            # 相對秩容差
    RANK_FLOOR = 1e-12         # 絕對秩下限
    JACOBI_TOL = 1e-8
    FD_STEP = 1e-5             # 巢狀 bracket / flow Jacobian 的中央差分步長
    LEAF_RESIDUAL = 1e-8       # leafwise_form 的 preimage 殘差容差（相對 ‖u‖）

    # flows
    FLOW_STEP = 1e-3
    ADAPTIVE_TOL = 1e-9
    PROBE_BUDGET = 10_000
    PROBE_REACH = 1e-4

    # coiso
    COISO_TOL = 1e-8
    PROJECTION_TOL = 1e-10
    PROJECTION_MAX_ITER = 50
    ON_SUBMANIFOLD_TOL = 1e-8
    REPROJECT_EVERY = 10

    # clean
    ESTIMATE_RADIUS = 1e-2
    ESTIMATE_SAMPLES = 40
    ESTIMATE_MIN_CONVERGED = 20
    PCA_THRESHOLD = 1e-3

    # c0lab
    FAMILY_INDICES = (1e1, 1e2, 1e3, 1e4, 1e5, 1e6)
    POISSON_RESIDUAL_TOL = 1e-6
    IMAGE_TOL = 1e-6
    IMPLICIT_TOL = 1e-12

    # scenarios
    GRID_NODES = 101
    GRID_CAP = 1_000_000


class RunOverrides(TypedDict, total=False):
    """
    正規化後的執行覆蓋設定（TypedDict, total=False）。

    - grid: 每軸節點數（取代 scenario 宣告的 nodes）
    - tol_rank: 秩容差
    - tol: 全域容差（取代每個 check 的 tolerance）
    - seed: 亂數種子
    - checks: 只執行這些 check 名稱
    - threads: worker 數量
    """
    grid: int
    tol_rank: float
    tol: float
    seed: int
    checks: list[str]
    threads: int


def normalize_overrides(raw: Mapping[str, Any] | None) -> RunOverrides:
    """
    將使用者輸入的覆蓋設定統一成 RunOverrides。

    支援 CLI 風格鍵名（tol-rank）與 None 值（視為未提供）。
    """
    normalized: RunOverrides = {}
    if not raw:
        return normalized

    for key, value in raw.items():
        if value is None:
            continue
        key = key.replace("-", "_")
        if key == "grid":
            nodes = int(value)
            if nodes < 2:
                raise ValueError(f"grid 至少需要 2 個節點，收到 {nodes}")
            normalized["grid"] = nodes
        elif key == "tol_rank":
            normalized["tol_rank"] = _positive_float(key, value)
        elif key == "tol":
            normalized["tol"] = _positive_float(key, value)
        elif key == "seed":
            normalized["seed"] = int(value)
        elif key == "checks":
            names = [value] if isinstance(value, str) else list(value)
            if names:
                normalized["checks"] = [str(n) for n in names]
        elif key == "threads":
            normalized["threads"] = max(1, int(value))
        else:
            raise ValueError(f"未知的覆蓋設定 {key!r}")

    return normalized


def _positive_float(key: str, value: Any) -> float:
    number = float(value)
    if not number > 0:
        raise ValueError(f"{key} 必須為正數，收到 {value!r}")
    return number


def resolve_thread_count(overrides: Mapping[str, Any] | None = None) -> int:
    """
    決定 worker 數量：overrides["threads"] > 環境變數 POISSONLAB_THREADS > 1。

    環境變數不是正整數時忽略（回到 1）。
    """
    if overrides and overrides.get("threads"):
        return max(1, int(overrides["threads"]))
    raw = os.environ.get(THREADS_ENV, "").strip()
    if raw.isdigit() and int(raw) > 0:
        return int(raw)
    return 1


def coarsen_nodes(nodes: list[int], cap: int = LabDefaults.GRID_CAP) -> tuple[list[int], bool]:
    """
    網格總節點數超過 cap 時等比例粗化（每軸保持奇數，讓 0 仍是節點）。

    Returns:
        (nodes, coarsened): 粗化後的每軸節點數，以及是否有粗化
    """
    total = math.prod(nodes)
    if total <= cap:
        return list(nodes), False
    factor = (cap / total) ** (1.0 / len(nodes))
    coarse = []
    for count in nodes:
        reduced = max(3, int(count * factor))
        if reduced % 2 == 0:
            reduced -= 1
        coarse.append(reduced)
    return coarse, True

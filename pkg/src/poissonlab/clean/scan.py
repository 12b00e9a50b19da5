"""
Clean locus 掃描

在投影到 C 的網格節點上逐點 classify，彙整 clean 比例與非 clean 點雲。
每個節點使用獨立的亂數流 default_rng([seed, index])，並行與否結果相同。
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from poissonlab.coiso.submanifold import ManifoldGrid, Submanifold
from poissonlab.core.errors import PoissonLabError
from poissonlab.core.run_config import LabDefaults
from poissonlab.poisson.structure import PoissonStructure
from poissonlab.utils.logger import get_logger, log_timing
from poissonlab.utils.parallel import parallel_map

from .atlas import LeafAtlas
from .classify import CleanVerdict, classify

_logger = get_logger("clean.scan")

BLOCK = 3


@dataclass(frozen=True, eq=False)
class ScanResult:
    """
    clean_locus_scan 的結果

    - verdicts: 與網格同形狀的 object 陣列；投影失敗的節點為 None
    - points: 投影後的節點座標（N × n，C-order 攤平）
    - mask: 投影成功的節點（長度 N）
    """

    verdicts: np.ndarray
    points: np.ndarray
    mask: np.ndarray

    @property
    def classified(self) -> int:
        return int(np.count_nonzero(self.mask))

    def kinds(self) -> np.ndarray:
        """每個節點的 kind 字串（未分類節點為空字串）。"""
        out = np.full(self.verdicts.shape, "", dtype=object)
        for idx in np.ndindex(self.verdicts.shape):
            verdict = self.verdicts[idx]
            if verdict is not None:
                out[idx] = verdict.kind
        return out

    def count(self, kind: str) -> int:
        return int(np.count_nonzero(self.kinds() == kind))

    @property
    def clean_fraction(self) -> float:
        """transverse ∪ clean_non_transverse 佔已判定節點（排除 undetermined）的比例。"""
        determined = self.classified - self.undetermined
        if determined <= 0:
            return 0.0
        clean = sum(
            1 for idx in np.ndindex(self.verdicts.shape)
            if self.verdicts[idx] is not None and self.verdicts[idx].is_clean
        )
        return clean / determined

    @property
    def undetermined(self) -> int:
        return self.count("undetermined")

    def non_clean_cloud(self) -> np.ndarray:
        """非 clean 節點的座標（m × n）。"""
        return self.points[self.kinds().ravel() == "non_clean"]

    def has_open_block(self) -> bool:
        """二維網格中是否存在 3×3 全部為 non_clean 的區塊。"""
        if self.verdicts.ndim != 2:
            return False
        bad = self.kinds() == "non_clean"
        rows, cols = bad.shape
        for i in range(rows - BLOCK + 1):
            for j in range(cols - BLOCK + 1):
                if bad[i : i + BLOCK, j : j + BLOCK].all():
                    return True
        return False


@log_timing("clean_locus_scan")
def clean_locus_scan(
    structure: PoissonStructure,
    manifold: Submanifold,
    atlas: LeafAtlas,
    mgrid: ManifoldGrid,
    seed: int = 0,
    threads: int = 1,
    tol_rank: float = LabDefaults.TOL_RANK,
    radius: float = LabDefaults.ESTIMATE_RADIUS,
    n_samples: int = LabDefaults.ESTIMATE_SAMPLES,
    threshold: float = LabDefaults.PCA_THRESHOLD,
) -> ScanResult:
    """在每個投影成功的節點上 classify。"""
    def work(flat: int) -> CleanVerdict | None:
        if not mgrid.mask[flat]:
            return None
        rng = np.random.default_rng([seed, flat])
        try:
            return classify(
                structure, manifold, atlas, mgrid.points[flat], rng,
                tol_rank=tol_rank, radius=radius, n_samples=n_samples, threshold=threshold,
            )
        except PoissonLabError as exc:
            _logger.debug(f"節點 {flat} 無法分類：{exc}")
            return CleanVerdict("undetermined", 0, None, {"error": str(exc)})

    total = len(mgrid.mask)
    results = parallel_map(work, range(total), threads)
    verdicts = np.empty(total, dtype=object)
    for flat, verdict in enumerate(results):
        verdicts[flat] = verdict
    verdicts = verdicts.reshape(mgrid.shape)

    result = ScanResult(verdicts=verdicts, points=mgrid.points, mask=mgrid.mask.copy())
    _logger.debug(
        f"掃描 {result.classified}/{total} 節點：clean 比例 {result.clean_fraction:.4f}，"
        f"undetermined {result.undetermined}"
    )
    return result

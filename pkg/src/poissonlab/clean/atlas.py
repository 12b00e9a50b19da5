"""
LeafAtlas：分區的葉不變量

每個 LeafRegion 由「秩條件 + membership > 0」界定，
區域內的葉由 invariants（Casimir 型函數）的值區分。
建構時沿探測 flow 檢查 invariants 守恆（1e-6）。
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from poissonlab.core.errors import LeafAtlasError, PoissonLabError
from poissonlab.core.protocols import DifferentiableScalar
from poissonlab.core.run_config import LabDefaults
from poissonlab.poisson.structure import PoissonStructure
from poissonlab.utils.logger import get_logger

_logger = get_logger("clean.atlas")

INVARIANT_TOL = 1e-6
PROBE_COUNT = 8
PROBE_TIME = 0.05
PROBE_STEP = 5e-3


@dataclass(frozen=True)
class LeafRegion:
    """
    atlas 的一個區域

    - rank: 區域內的葉維度（None 表示不限制）
    - membership: 區域條件 membership(p) > 0（None 表示不限制）
    - invariants: 在區域內的每個葉上為常數
    """

    name: str
    invariants: tuple[DifferentiableScalar, ...] = ()
    rank: int | None = None
    membership: DifferentiableScalar | None = None

    def invariant_values(self, p: Sequence[float]) -> np.ndarray:
        return np.array([g.eval(p) for g in self.invariants])


class LeafAtlas:
    """
    葉的 atlas

    使用方式:
        atlas = LeafAtlas.build(structure, [LeafRegion("leaves", (z_field,), rank=2)])
        atlas.region_of((0.3, 0.1, 0.5)).name    # "leaves"
    """

    def __init__(
        self,
        structure: PoissonStructure,
        regions: Sequence[LeafRegion],
        tol_rank: float = LabDefaults.TOL_RANK,
    ):
        if not regions:
            raise ValueError("atlas 至少需要一個區域")
        names = [r.name for r in regions]
        if len(set(names)) != len(names):
            raise ValueError(f"區域名稱重複：{names}")
        self._structure = structure
        self._regions = tuple(regions)
        self._tol_rank = tol_rank

    @classmethod
    def build(
        cls,
        structure: PoissonStructure,
        regions: Sequence[LeafRegion],
        tol_rank: float = LabDefaults.TOL_RANK,
        hamiltonians: Sequence[DifferentiableScalar] | None = None,
        seed: int = 0,
    ) -> "LeafAtlas":
        """
        建構並驗證（探測 flow 上 invariants 守恆）

        Raises:
            LeafAtlasError: 某區域的 invariant 偏移超過 1e-6
        """
        atlas = cls(structure, regions, tol_rank)
        atlas.validate(hamiltonians, seed=seed)
        return atlas

    @property
    def structure(self) -> PoissonStructure:
        return self._structure

    @property
    def tol_rank(self) -> float:
        return self._tol_rank

    @property
    def regions(self) -> tuple[LeafRegion, ...]:
        return self._regions

    def region(self, name: str) -> LeafRegion:
        for region in self._regions:
            if region.name == name:
                return region
        raise KeyError(name)

    def region_of(self, p: Sequence[float]) -> LeafRegion | None:
        """第一個滿足秩條件與 membership > 0 的區域。"""
        rank: int | None = None
        for region in self._regions:
            if region.rank is not None:
                if rank is None:
                    try:
                        rank = self._structure.rank_at(p, self._tol_rank)
                    except PoissonLabError:
                        return None
                if rank != region.rank:
                    continue
            if region.membership is not None and not region.membership.eval(p) > 0:
                continue
            return region
        return None

    def leaf_key(self, p: Sequence[float]) -> tuple[str, np.ndarray] | None:
        """(區域名稱, invariant 值)；不在任何區域時為 None。"""
        region = self.region_of(p)
        if region is None:
            return None
        return region.name, region.invariant_values(p)

    def same_leaf_label(self, p: Sequence[float], q: Sequence[float], tol: float = INVARIANT_TOL) -> bool:
        """兩點的區域與 invariants 是否一致（只看 atlas，不走 flow）。"""
        kp, kq = self.leaf_key(p), self.leaf_key(q)
        if kp is None or kq is None or kp[0] != kq[0]:
            return False
        return bool(np.all(np.abs(kp[1] - kq[1]) <= tol))

    # -------------------------------------------------------------------------
    # 驗證與取樣
    # -------------------------------------------------------------------------

    def validate(
        self,
        hamiltonians: Sequence[DifferentiableScalar] | None = None,
        seed: int = 0,
        count: int = PROBE_COUNT,
    ) -> float:
        """
        從隨機探測點沿每個 Hamiltonian flow 走 PROBE_TIME，
        起終點落在同一區域時比較 invariants；回傳最大偏移。
        """
        from poissonlab.exprcore.field import coordinate_field
        from poissonlab.flows.integrator import FlowSpec, integrate

        chart = self._structure.chart
        if hamiltonians is None:
            hamiltonians = [coordinate_field(name, chart.coord_names) for name in chart.coord_names]
        rng = np.random.default_rng(seed)
        probes = chart.sample(rng, count, margin=0.25)

        worst = 0.0
        for p in probes:
            region = self.region_of(p)
            if region is None or not region.invariants:
                continue
            before = region.invariant_values(p)
            for h in hamiltonians:
                spec = FlowSpec(h, (0.0, PROBE_TIME), step=PROBE_STEP)
                try:
                    q = integrate(self._structure, spec, p).final
                except PoissonLabError:
                    continue
                if self.region_of(q) is not region:
                    continue
                deviation = float(np.max(np.abs(region.invariant_values(q) - before)))
                worst = max(worst, deviation)
                if deviation > INVARIANT_TOL:
                    raise LeafAtlasError(region.name, deviation)
        _logger.debug(f"atlas 驗證完成：最大偏移 {worst:.3e}")
        return worst

    def sample_leaf(
        self,
        p: Sequence[float],
        rng: np.random.Generator,
        count: int,
        spread: float = 0.1,
        step: float = 1e-2,
    ) -> np.ndarray:
        """
        從 p 出發，以隨機座標 Hamiltonian 的短 flow 組合取得同一葉上的點（含 p 本身）。
        離開 chart 的 flow 會被略過。
        """
        from poissonlab.exprcore.field import coordinate_field
        from poissonlab.flows.integrator import FlowSpec, integrate

        chart = self._structure.chart
        generators = [coordinate_field(name, chart.coord_names) for name in chart.coord_names]
        points = [chart.require(p)]
        current = points[0]
        attempts = 0
        while len(points) < count and attempts < 10 * count:
            attempts += 1
            h = generators[int(rng.integers(len(generators)))]
            t = float(rng.uniform(-spread, spread))
            try:
                current = integrate(self._structure, FlowSpec.for_time(h, t, step=step), current).final
            except PoissonLabError:
                current = points[0]
                continue
            points.append(current)
        return np.array(points)

"""
ScenarioContext：把文字層級的 Scenario 轉成實際物件

建構時一次完成（chart、結構、子流形、atlas、flow、族），之後唯讀，
因此可以在多個 worker 之間共用。
"""

from __future__ import annotations

from typing import Any

from poissonlab.c0lab.family import MapFamily
from poissonlab.c0lab.flows import ExpressionFlow, ImplicitShearFlow
from poissonlab.c0lab.hameotopy import HameotopyFamily
from poissonlab.c0lab.maps import SmoothMap
from poissonlab.clean.atlas import LeafAtlas, LeafRegion
from poissonlab.coiso.submanifold import Submanifold
from poissonlab.core.protocols import DifferentiableScalar, EvaluableMap
from poissonlab.core.run_config import LabDefaults
from poissonlab.exprcore.api import parse
from poissonlab.exprcore.implicit import ImplicitFunction
from poissonlab.poisson.chart import Chart
from poissonlab.poisson.structure import PoissonStructure
from poissonlab.utils.logger import get_logger

from .model import Box, Scenario, is_reference

_logger = get_logger("scenarios.context")

Flow = ExpressionFlow | ImplicitShearFlow


def box_chart(coords: tuple[str, ...], box: Box) -> Chart:
    return Chart(coords, tuple(lo for lo, _ in box), tuple(hi for _, hi in box))


class ScenarioContext:
    """
    使用方式:
        ctx = ScenarioContext(builtin("cubic-graph"))
        ctx.structure.rank_at((0, 0, 0))
        ctx.manifold("@C").project_to((0.5, 0, 0))
    """

    def __init__(self, scenario: Scenario, tol_rank: float = LabDefaults.TOL_RANK, validate: bool = True):
        self._scenario = scenario
        self._tol_rank = tol_rank
        coords = scenario.coord_names
        self._coords = coords
        self._chart = Chart(coords, tuple(c.lower for c in scenario.coords), tuple(c.upper for c in scenario.coords))

        self._implicits: dict[str, ImplicitFunction] = {}
        for spec in scenario.implicits:
            self._implicits[spec.name] = ImplicitFunction(
                parse(spec.equation, (spec.unknown,) + coords, scenario.params),
                spec.unknown,
                coords,
                offset=self.expression(spec.offset) if spec.offset is not None else None,
                scale=spec.scale,
            )

        self._structure = PoissonStructure.from_entries(
            self._chart, [(e.a, e.b, self.expression(e.expr)) for e in scenario.poisson]
        )

        self._manifolds = {
            spec.name: Submanifold.create(
                self._chart, [self.scalar(eq) for eq in spec.equations], spec.name, validate=validate
            )
            for spec in scenario.submanifolds
        }

        self._atlas: LeafAtlas | None = None
        if scenario.regions:
            regions = [
                LeafRegion(
                    spec.name,
                    invariants=tuple(self.scalar(inv) for inv in spec.invariants),
                    rank=spec.rank,
                    membership=self.scalar(spec.membership) if spec.membership is not None else None,
                )
                for spec in scenario.regions
            ]
            if validate:
                self._atlas = LeafAtlas.build(self._structure, regions, tol_rank, seed=scenario.seed)
            else:
                self._atlas = LeafAtlas(self._structure, regions, tol_rank)

        self._flows: dict[str, Flow] = {}
        for flow in scenario.flows:
            self._flows[flow.name] = ExpressionFlow(
                SmoothMap([self.expression(c) for c in flow.components]), flow.time_param
            )
        for shear in scenario.shears:
            self._flows[shear.name] = ImplicitShearFlow(
                coords,
                self.scalar(shear.g),
                shear.along,
                shear.shear,
                drift=shear.drift,
                factor=self.scalar(shear.factor) if shear.factor is not None else None,
                wrt=shear.wrt,
                domain=self._chart,
            )

        self._families = {}
        for fam in scenario.families:
            self._families[fam.name] = MapFamily(
                members=SmoothMap([self.scalar(c) for c in fam.components], self._chart),
                limit=SmoothMap([self.scalar(c) for c in fam.limit]),
                compacts=tuple(box_chart(coords, box) for box in fam.compacts),
                index_param=fam.index_param,
                indices=fam.indices or LabDefaults.FAMILY_INDICES,
                tolerance=fam.tolerance,
                compact_nodes=fam.nodes,
            )

        self._hameotopies = {}
        for ham in scenario.hameotopies:
            self._hameotopies[ham.name] = HameotopyFamily(
                hamiltonian=self.scalar(ham.hamiltonian),
                support=box_chart(coords, ham.support) if ham.support is not None else self._chart,
                limit_hamiltonian=self.scalar(ham.limit) if ham.limit is not None else None,
                index_param=ham.index_param,
                time_param=ham.time_param,
                indices=ham.indices or LabDefaults.FAMILY_INDICES,
            )

        _logger.debug(
            f"scenario {scenario.name!r}：{len(self._manifolds)} 個子流形、"
            f"{len(self._flows)} 個 flow、{len(self._families)} 個族"
        )

    # -------------------------------------------------------------------------
    # 基本物件
    # -------------------------------------------------------------------------

    @property
    def scenario(self) -> Scenario:
        return self._scenario

    @property
    def chart(self) -> Chart:
        return self._chart

    @property
    def coords(self) -> tuple[str, ...]:
        return self._coords

    @property
    def structure(self) -> PoissonStructure:
        return self._structure

    @property
    def tol_rank(self) -> float:
        return self._tol_rank

    @property
    def atlas(self) -> LeafAtlas:
        if self._atlas is None:
            raise ValueError(f"scenario {self._scenario.name!r} 沒有宣告任何 [region]")
        return self._atlas

    def expression(self, text: str) -> DifferentiableScalar:
        return parse(text, self._coords, self._scenario.params)

    def scalar(self, text: str) -> DifferentiableScalar:
        """運算式或 @implicit 參照。"""
        if is_reference(text):
            return _lookup(self._implicits, text, "implicit")
        return self.expression(text)

    # -------------------------------------------------------------------------
    # 具名物件
    # -------------------------------------------------------------------------

    def manifold(self, ref: str) -> Submanifold:
        return _lookup(self._manifolds, ref, "submanifold")

    def flow(self, ref: str) -> Flow:
        return _lookup(self._flows, ref, "flow")

    def family(self, ref: str) -> MapFamily:
        return _lookup(self._families, ref, "family")

    def hameotopy(self, ref: str) -> HameotopyFamily:
        return _lookup(self._hameotopies, ref, "hameotopy")

    def limit_map(self, ref: str, t: float = 1.0) -> EvaluableMap:
        """@family 的極限映射，或 @flow/@shear 在時間 t 的映射。"""
        name = ref[1:] if is_reference(ref) else ref
        if name in self._families:
            return self._families[name].limit
        return self.flow(ref).at(t)


def _lookup(table: dict[str, Any], ref: str, kind: str) -> Any:
    name = ref[1:] if is_reference(ref) else ref
    try:
        return table[name]
    except KeyError:
        raise ValueError(f"未知的 {kind} {ref!r}；可用：{sorted(table)}") from None

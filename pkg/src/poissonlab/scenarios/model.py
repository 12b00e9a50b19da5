"""
Scenario 資料模型

所有欄位都是「文字層級」的描述（運算式字串、@參照、數值），
由 ScenarioContext 轉成實際物件；因此 save∘load 可以是恆等映射。

參照語法：值以 @ 開頭時指向同一 scenario 中的具名物件
（@implicit 名稱、@flow/@shear 名稱、@family 名稱、@submanifold 名稱）。
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Literal

ArtifactKind = Literal["grid", "cloud", "curve"]
CheckStatus = Literal["pass", "fail", "undetermined", "error"]
Box = tuple[tuple[float, float], ...]


def is_reference(token: str) -> bool:
    return token.startswith("@")


@dataclass(frozen=True)
class CoordSpec:
    name: str
    lower: float
    upper: float


@dataclass(frozen=True)
class PoissonEntry:
    """Π^{a b} = expr（a、b 為座標名稱）。"""

    a: str
    b: str
    expr: str


@dataclass(frozen=True)
class SubmanifoldSpec:
    name: str
    equations: tuple[str, ...]


@dataclass(frozen=True)
class RegionSpec:
    """atlas 區域；membership 為 None 表示不限制。"""

    name: str
    rank: int | None = None
    membership: str | None = None
    invariants: tuple[str, ...] = ()


@dataclass(frozen=True)
class ImplicitSpec:
    """value = offset + scale·w，其中 equation(w, coords) = 0。"""

    name: str
    unknown: str
    equation: str
    offset: str | None = None
    scale: float = 1.0


@dataclass(frozen=True)
class FlowSpecText:
    """ExpressionFlow：分量運算式（含時間參數）。"""

    name: str
    components: tuple[str, ...]
    time_param: str = "t"


@dataclass(frozen=True)
class ShearSpec:
    """ImplicitShearFlow 的描述。"""

    name: str
    g: str
    along: str
    shear: str
    drift: str | None = None
    factor: str | None = None
    wrt: str | None = None


@dataclass(frozen=True)
class FamilySpec:
    """
    MapFamily 的描述

    - components: 成員分量（運算式或 @implicit）
    - limit: 極限分量（運算式或 @implicit），或單一 @flow 名稱並搭配 limit_time
    """

    name: str
    components: tuple[str, ...]
    limit: tuple[str, ...]
    compacts: tuple[Box, ...] = ()
    index_param: str = "n"
    indices: tuple[float, ...] = ()
    tolerance: float = 1e-2
    nodes: int = 21


@dataclass(frozen=True)
class HameotopySpec:
    name: str
    hamiltonian: str
    limit: str | None = None
    index_param: str = "n"
    time_param: str | None = None
    indices: tuple[float, ...] = ()
    support: Box | None = None


@dataclass(frozen=True)
class CheckSpec:
    """
    一個具名的 check 呼叫

    - op: 註冊的運算名稱
    - tolerance: 門檻（None 表示使用運算預設值）
    - expect: "pass" 或 "fail"（期待原始結果為失敗，例如非 Poisson 的對照組）
    - args: (key, tokens) 依檔案順序保存，key 可重複
    """

    name: str
    op: str
    tolerance: float | None = None
    expect: Literal["pass", "fail"] = "pass"
    args: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def values(self, key: str) -> list[tuple[str, ...]]:
        return [tokens for k, tokens in self.args if k == key]

    def first(self, key: str) -> tuple[str, ...] | None:
        found = self.values(key)
        return found[0] if found else None


@dataclass(frozen=True)
class Scenario:
    """
    一個完整的 scenario

    使用方式:
        scenario = builtin("cubic-graph")
        report = ScenarioEngine().run(scenario, seed=0)
    """

    name: str
    coords: tuple[CoordSpec, ...]
    description: str = ""
    seed: int = 0
    params: tuple[str, ...] = ()
    plot: tuple[str, ...] = ()
    poisson: tuple[PoissonEntry, ...] = ()
    submanifolds: tuple[SubmanifoldSpec, ...] = ()
    regions: tuple[RegionSpec, ...] = ()
    implicits: tuple[ImplicitSpec, ...] = ()
    flows: tuple[FlowSpecText, ...] = ()
    shears: tuple[ShearSpec, ...] = ()
    families: tuple[FamilySpec, ...] = ()
    hameotopies: tuple[HameotopySpec, ...] = ()
    checks: tuple[CheckSpec, ...] = ()

    @property
    def coord_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.coords)

    def check(self, name: str) -> CheckSpec:
        for spec in self.checks:
            if spec.name == name:
                return spec
        raise KeyError(name)


# =============================================================================
# Report
# =============================================================================

@dataclass(frozen=True)
class Artifact:
    """
    報告附帶的資料

    - grid: {"axes": [a, b], "x": [...], "y": [...], "values": [[...]]}
    - cloud: {"coords": [...], "points": [[...]], "background": [[...]]（可選）}
    - curve: {"x": [...], "y": [...], "x_label": str, "y_label": str}
    """

    kind: ArtifactKind
    name: str
    data: dict[str, Any]


@dataclass(frozen=True)
class CheckRecord:
    name: str
    op: str
    status: CheckStatus
    metric: float | None = None
    tolerance: float | None = None
    runtime_ms: float = 0.0
    message: str = ""


@dataclass(frozen=True)
class Report:
    scenario: str
    seed: int
    checks: tuple[CheckRecord, ...] = ()
    artifacts: tuple[Artifact, ...] = ()
    warnings: tuple[str, ...] = ()
    plot: tuple[str, ...] = ()

    def status_counts(self) -> dict[str, int]:
        counts = {"pass": 0, "fail": 0, "undetermined": 0, "error": 0}
        for record in self.checks:
            counts[record.status] += 1
        return counts

    @property
    def exit_code(self) -> int:
        """0：全部通過；1：有失敗；2：有基礎設施錯誤。"""
        counts = self.status_counts()
        if counts["error"]:
            return 2
        if counts["fail"]:
            return 1
        return 0

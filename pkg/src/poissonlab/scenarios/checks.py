"""
Check 運算註冊表

每個 op 是 `(CheckInvocation) -> CheckOutcome` 的函式，以 @register 登錄。
op 只回報「原始結果」（passed True/False/None=undetermined）；
CheckSpec.expect 的反轉、狀態與事件由 runner 負責。

慣例：
- tolerance 一律是上限（metric ≤ tolerance 為通過）
- 預期中的數學失敗（例如 MemberNotPoissonError）在 op 內轉成 passed=False；
  其餘例外交給 runner 記錄為 error
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

import numpy as np

from poissonlab.c0lab.analysis import (
    C0Generator,
    c0_char_partition_probe,
    char_leaf_image_analysis,
    leaf_mapping_check,
    leaf_samples,
    leafwise_symplectic_check,
)
from poissonlab.c0lab.family import verify_family
from poissonlab.c0lab.flows import ExpressionFlow
from poissonlab.c0lab.hameotopy import casimir_hameotopy_check, run_hameotopy
from poissonlab.clean.classify import CleanVerdict, classify
from poissonlab.clean.leafwise import characteristic_coincidence, leafwise_coisotropy_check
from poissonlab.clean.scan import clean_locus_scan
from poissonlab.coiso.characteristic import (
    characteristic_data,
    is_coisotropic_at,
    trace_characteristic_leaf,
    vanishing_ideal_bracket_check,
)
from poissonlab.coiso.submanifold import Submanifold, grid_on_submanifold
from poissonlab.core.errors import (
    DomainError,
    ImageOffTargetError,
    LeftDomainError,
    MemberNotPoissonError,
    NotVanishingError,
    OddRankError,
    OffSubmanifoldError,
    ProjectionError,
)
from poissonlab.core.run_config import LabDefaults, coarsen_nodes
from poissonlab.exprcore.field import ScalarField, constant_field, coordinate_field
from poissonlab.flows.integrator import FlowSpec, integrate
from poissonlab.flows.leaves import leaf_dim_map, same_leaf_probe
from poissonlab.poisson.checks import jacobiator, lower_semicontinuity_check
from poissonlab.poisson.structure import PoissonStructure
from poissonlab.utils.logger import get_logger
from poissonlab.utils.parallel import parallel_map

from .context import Flow, ScenarioContext, box_chart
from .model import Artifact, CheckSpec

_logger = get_logger("scenarios.checks")

ZERO_TOL = 1e-12
KIND_CODES = {"transverse": 0, "clean_non_transverse": 1, "non_clean": 2, "undetermined": 3}


# =============================================================================
# 呼叫與結果
# =============================================================================

@dataclass(frozen=True)
class CheckOutcome:
    """
    op 的原始結果

    - passed: True / False；None 表示 undetermined
    - metric: 與 tolerance 比較的數值（不適用時為 None）
    """

    passed: bool | None
    metric: float | None = None
    message: str = ""
    artifacts: tuple[Artifact, ...] = ()


@dataclass
class CheckInvocation:
    """
    一次 check 執行所需的一切

    - tolerance: 生效的門檻（overrides.tol > spec.tolerance > op 預設）
    - grid: --grid 覆蓋（只影響掃描類網格）
    """

    ctx: ScenarioContext
    spec: CheckSpec
    tolerance: float | None
    rng: np.random.Generator
    threads: int = 1
    grid: int | None = None
    warnings: list[str] = field(default_factory=list)

    # -------------------------------------------------------------------------
    # 參數讀取
    # -------------------------------------------------------------------------

    @property
    def tol_rank(self) -> float:
        return self.ctx.tol_rank

    @property
    def structure(self) -> PoissonStructure:
        return self.ctx.structure

    def text(self, key: str, default: str | None = None) -> str:
        tokens = self.spec.first(key)
        if tokens is None:
            if default is None:
                raise ValueError(f"check {self.spec.name!r} 缺少參數 {key!r}")
            return default
        if len(tokens) != 1:
            raise ValueError(f"check {self.spec.name!r} 的 {key!r} 需要一個值")
        return tokens[0]

    def number(self, key: str, default: float | None = None) -> float:
        tokens = self.spec.first(key)
        if tokens is None:
            if default is None:
                raise ValueError(f"check {self.spec.name!r} 缺少參數 {key!r}")
            return float(default)
        return float(tokens[0])

    def integer(self, key: str, default: int) -> int:
        tokens = self.spec.first(key)
        return int(tokens[0]) if tokens is not None else default

    def numbers(self, key: str, default: Sequence[float] = ()) -> tuple[float, ...]:
        tokens = self.spec.first(key)
        return tuple(float(t) for t in tokens) if tokens is not None else tuple(default)

    def flag(self, key: str, default: bool = False) -> bool:
        tokens = self.spec.first(key)
        if tokens is None:
            return default
        value = tokens[0].lower()
        if value not in ("true", "false"):
            raise ValueError(f"{key!r} 只接受 true 或 false，收到 {tokens[0]!r}")
        return value == "true"

    def points(self, key: str = "point") -> list[np.ndarray]:
        dim = self.ctx.chart.dim
        out = []
        for tokens in self.spec.values(key):
            if len(tokens) != dim:
                raise ValueError(f"{key!r} 需要 {dim} 個座標，收到 {len(tokens)}")
            out.append(np.array([float(t) for t in tokens]))
        return out

    def params(self) -> dict[str, float]:
        """`param = name value`（可重複）。"""
        return {tokens[0]: float(tokens[1]) for tokens in self.spec.values("param")}

    def fixed(self) -> dict[str, float]:
        """`fixed = name value`（可重複）。"""
        return {tokens[0]: float(tokens[1]) for tokens in self.spec.values("fixed")}

    def axes(self) -> tuple[str, ...]:
        tokens = self.spec.first("axes")
        if tokens is None:
            raise ValueError(f"check {self.spec.name!r} 缺少 axes")
        return tokens

    def grid_nodes(self, axes: Sequence[str]) -> list[int]:
        """掃描網格的每軸節點數（--grid 覆蓋；總數超過上限時粗化並警告）。"""
        if self.grid is not None:
            nodes = [self.grid] * len(axes)
        else:
            declared = self.numbers("nodes", (LabDefaults.GRID_NODES,))
            nodes = [int(v) for v in declared] if len(declared) == len(axes) else [int(declared[0])] * len(axes)
        nodes, coarsened = coarsen_nodes(nodes)
        if coarsened:
            self.warnings.append(f"網格節點數超過 {LabDefaults.GRID_CAP}，粗化為 {nodes}")
        return nodes

    def manifold(self, key: str = "manifold") -> Submanifold:
        return self.ctx.manifold(self.text(key))

    # -------------------------------------------------------------------------
    # 取樣
    # -------------------------------------------------------------------------

    def sample_on(self, manifold: Submanifold, count: int, margin: float = 0.05) -> list[np.ndarray]:
        """在 chart 內取樣並投影到 C 上（失敗的種子略過）。"""
        chart = manifold.chart
        found: list[np.ndarray] = []
        attempts = 0
        while len(found) < count and attempts < 10 * max(count, 1):
            batch = chart.sample(self.rng, count, margin)
            for seed in batch:
                attempts += 1
                try:
                    found.append(manifold.project_to(seed))
                except ProjectionError:
                    continue
                if len(found) >= count:
                    break
        return found

    def on_manifold(self, manifold: Submanifold, key: str = "point", count: int = 50) -> list[np.ndarray]:
        """明確的點（投影到 C 上）或取樣 count 個。"""
        explicit = self.points(key)
        if not explicit:
            return self.sample_on(manifold, self.integer("count", count))
        return [p if manifold.residual(p) <= LabDefaults.ON_SUBMANIFOLD_TOL else manifold.project_to(p)
                for p in explicit]

    def seeds_in_box(self, count: int, margin: float = 0.05) -> list[np.ndarray]:
        explicit = self.points()
        if explicit:
            return explicit
        box = self.spec.first("box")
        chart = self.ctx.chart if box is None else box_chart(self.ctx.coords, _pairs(box))
        return list(chart.sample(self.rng, self.integer("count", count), margin))


def _pairs(tokens: Sequence[str]) -> tuple[tuple[float, float], ...]:
    values = [float(t) for t in tokens]
    if len(values) % 2:
        raise ValueError("box 需要成對的上下界")
    return tuple((values[k], values[k + 1]) for k in range(0, len(values), 2))


CheckOp = Callable[[CheckInvocation], CheckOutcome]


@dataclass(frozen=True)
class RegisteredOp:
    fn: CheckOp
    default_tolerance: float | None


CHECK_OPS: dict[str, RegisteredOp] = {}


def register(name: str, tolerance: float | None = None) -> Callable[[CheckOp], CheckOp]:
    def decorator(fn: CheckOp) -> CheckOp:
        if name in CHECK_OPS:
            raise ValueError(f"重複註冊 op {name!r}")
        CHECK_OPS[name] = RegisteredOp(fn, tolerance)
        return fn
    return decorator


def available_ops() -> list[str]:
    return sorted(CHECK_OPS)


def _within(metric: float, tolerance: float | None) -> bool:
    return tolerance is None or metric <= tolerance


def _expected_dims(inv: CheckInvocation, points: np.ndarray) -> np.ndarray | None:
    """`dim = k`，或 `rule = "expr" k_zero k_else`（expr 為 0 的節點期待 k_zero）。"""
    uniform = inv.spec.first("dim")
    if uniform is not None:
        return np.full(len(points), int(uniform[0]))
    rule = inv.spec.first("rule")
    if rule is None:
        return None
    expr = inv.ctx.expression(rule[0])
    zero, other = int(rule[1]), int(rule[2])
    return np.array([zero if abs(expr.eval(p)) <= ZERO_TOL else other for p in points])


def _grid_artifact(name: str, axes: Sequence[str], axis_values: Sequence[np.ndarray], values: np.ndarray) -> Artifact:
    return Artifact("grid", name, {
        "axes": list(axes),
        "x": [float(v) for v in axis_values[0]],
        "y": [float(v) for v in axis_values[1]],
        "values": [[float(v) for v in row] for row in values],
    })


def _cloud_artifact(name: str, coords: Sequence[str], points: np.ndarray, background: np.ndarray | None = None) -> Artifact:
    data: dict[str, Any] = {"coords": list(coords), "points": [[float(v) for v in p] for p in points]}
    if background is not None:
        data["background"] = [[float(v) for v in p] for p in background]
    return Artifact("cloud", name, data)


# =============================================================================
# Poisson 結構
# =============================================================================

@register("jacobi", LabDefaults.JACOBI_TOL)
def _jacobi(inv: CheckInvocation) -> CheckOutcome:
    """座標函數三元組上的 Jacobiator；`entry` 參數可改用另一個雙向量（對照組）。"""
    ctx = inv.ctx
    entries = inv.spec.values("entry")
    structure = inv.structure
    if entries:
        structure = PoissonStructure.from_entries(
            ctx.chart, [(a, b, ctx.expression(text)) for a, b, text in entries]
        )
    coords = [coordinate_field(name, ctx.coords) for name in ctx.coords]
    triples = list(itertools.combinations(coords, 3))
    points = ctx.chart.sample(inv.rng, inv.integer("count", 1000), margin=0.05)

    def worst_at(p: np.ndarray) -> float:
        return max((abs(jacobiator(structure, f, g, h, p)) for f, g, h in triples), default=0.0)

    metric = max(parallel_map(worst_at, list(points), inv.threads), default=0.0)
    return CheckOutcome(_within(metric, inv.tolerance), metric, f"{len(points)} 點 × {len(triples)} 組")


@register("rank_parity")
def _rank_parity(inv: CheckInvocation) -> CheckOutcome:
    points = inv.ctx.chart.sample(inv.rng, inv.integer("count", 500))

    def odd(p: np.ndarray) -> bool:
        try:
            inv.structure.rank_at(p, inv.tol_rank)
        except OddRankError:
            return True
        return False

    count = sum(parallel_map(odd, list(points), inv.threads))
    return CheckOutcome(count == 0, float(count), f"{count}/{len(points)} 點的數值秩為奇數")


@register("leaf_dim_map")
def _leaf_dim_map(inv: CheckInvocation) -> CheckOutcome:
    axes = inv.axes()
    grid = inv.ctx.chart.grid(inv.grid_nodes(axes), axes, inv.fixed())
    try:
        ranks = leaf_dim_map(inv.structure, grid, inv.tol_rank, inv.threads)
    except OddRankError as exc:
        return CheckOutcome(False, None, str(exc))
    artifacts = ()
    if len(axes) == 2:
        artifacts = (_grid_artifact(f"{inv.spec.name}", axes, grid.axis_values, ranks),)
    expected = _expected_dims(inv, grid.points)
    if expected is None:
        return CheckOutcome(True, None, f"葉維度 {sorted(set(ranks.ravel().tolist()))}", artifacts)
    mismatches = int(np.count_nonzero(ranks.ravel() != expected))
    return CheckOutcome(mismatches == 0, float(mismatches), f"{mismatches}/{grid.size} 節點不符", artifacts)


@register("lower_semicontinuity")
def _lower_semicontinuity(inv: CheckInvocation) -> CheckOutcome:
    points = inv.ctx.chart.grid(inv.integer("nodes", 5)).points
    report = lower_semicontinuity_check(
        inv.structure, points, radius=inv.number("radius", 0.1), tol_rank=inv.tol_rank
    )
    return CheckOutcome(
        report.passed, float(len(report.violations)),
        f"{report.checked} 點，settle index {report.settle_index}",
    )


# =============================================================================
# Flows
# =============================================================================

@register("energy", 1e-6)
def _energy(inv: CheckInvocation) -> CheckOutcome:
    """H∘φ^t − H 與 φ^{-t}∘φ^t 的偏差；離開 chart 的種子略過。"""
    h = inv.ctx.scalar(inv.text("hamiltonian"))
    t = inv.number("t", 1.0)
    step = inv.number("step", LabDefaults.FLOW_STEP)
    params = inv.params()
    reversal_tol = inv.number("reversal", 1e-7)
    seeds = inv.seeds_in_box(100, margin=0.25)
    forward = FlowSpec.for_time(h, t, step=step, params=params)
    backward = FlowSpec.for_time(h, -t, step=step, params=params)

    def drift(p: np.ndarray) -> tuple[float, float] | None:
        try:
            q = integrate(inv.structure, forward, p).final
            back = integrate(inv.structure, backward, q).final
        except LeftDomainError:
            return None
        return abs(h.eval(q, params) - h.eval(p, params)), float(np.linalg.norm(back - p))

    results = [r for r in parallel_map(drift, seeds, inv.threads) if r is not None]
    if not results:
        return CheckOutcome(None, None, "所有種子都離開 chart")
    energy = max(r[0] for r in results)
    reversal = max(r[1] for r in results)
    passed = _within(energy, inv.tolerance) and reversal <= reversal_tol
    return CheckOutcome(
        passed, energy,
        f"{len(results)}/{len(seeds)} 種子，能量漂移 {energy:.3e}，反轉誤差 {reversal:.3e}",
    )


def _bind_flow(flow: Flow, index_param: str, n: float) -> Flow:
    if isinstance(flow, ExpressionFlow) and index_param in flow.components.params:
        return ExpressionFlow(flow.components.with_params(**{index_param: n}), flow.time_param)
    return flow


@register("flow_closed_form", 1e-8)
def _flow_closed_form(inv: CheckInvocation) -> CheckOutcome:
    """數值積分的時間 t flow 與封閉形式在 box 格點上的最大距離。"""
    ctx = inv.ctx
    h = ctx.scalar(inv.text("hamiltonian"))
    flow = ctx.flow(inv.text("flow"))
    index = inv.text("index", "n")
    indices: tuple[float | None, ...] = inv.numbers("indices") or (None,)
    t = inv.number("t", 1.0)
    step = inv.number("step", LabDefaults.FLOW_STEP)
    method = inv.text("method", "rk4")
    box = inv.spec.first("box")
    chart = ctx.chart if box is None else box_chart(ctx.coords, _pairs(box))
    points = list(chart.grid(inv.integer("nodes", 21)).points)

    worst = 0.0
    skipped = 0
    for n in indices:
        params = inv.params()
        if n is not None:
            params[index] = float(n)
        spec = FlowSpec.for_time(h, t, step=step, method=method, params=params)  # type: ignore[arg-type]
        closed = _bind_flow(flow, index, n) if n is not None else flow

        def distance(p: np.ndarray) -> float | None:
            try:
                q = integrate(inv.structure, spec, p).final
            except LeftDomainError:
                return None
            return float(np.linalg.norm(q - closed.evaluate(p, t)))

        for value in parallel_map(distance, points, inv.threads):
            if value is None:
                skipped += 1
            else:
                worst = max(worst, value)
    if skipped == len(points) * len(indices):
        return CheckOutcome(None, None, "所有格點的 flow 都離開 chart")
    return CheckOutcome(_within(worst, inv.tolerance), worst, f"{len(points)} 格點，略過 {skipped}")


@register("same_leaf")
def _same_leaf(inv: CheckInvocation) -> CheckOutcome:
    """`pair = p… q… verdict`（可重複）。"""
    dim = inv.ctx.chart.dim
    mismatches = []
    pairs = inv.spec.values("pair")
    for tokens in pairs:
        if len(tokens) != 2 * dim + 1:
            raise ValueError(f"pair 需要 {2 * dim} 個座標與一個 verdict")
        p = [float(v) for v in tokens[:dim]]
        q = [float(v) for v in tokens[dim: 2 * dim]]
        probe = same_leaf_probe(
            inv.structure, inv.ctx.atlas, p, q,
            budget=inv.integer("budget", LabDefaults.PROBE_BUDGET), tol_rank=inv.tol_rank,
        )
        if probe.verdict != tokens[-1]:
            mismatches.append(f"{tuple(p)}~{tuple(q)}：{probe.verdict}（{probe.reason}）")
    return CheckOutcome(not mismatches, float(len(mismatches)), "; ".join(mismatches) or f"{len(pairs)} 組一致")


# =============================================================================
# Coisotropy 與特徵
# =============================================================================

@register("coisotropy", LabDefaults.COISO_TOL)
def _coisotropy(inv: CheckInvocation) -> CheckOutcome:
    manifold = inv.manifold()
    points = inv.on_manifold(manifold)
    tol = inv.tolerance if inv.tolerance is not None else LabDefaults.COISO_TOL
    results = [is_coisotropic_at(inv.structure, manifold, p, tol) for p in points]
    if not results:
        return CheckOutcome(None, None, "沒有任何點投影到 C 上")
    witness = max(results, key=lambda r: r.value)
    return CheckOutcome(
        all(results), witness.value,
        f"{len(results)} 點，最大 |{{F_a,F_b}}| 在 pair {witness.pair}",
    )


@register("char_dims")
def _char_dims(inv: CheckInvocation) -> CheckOutcome:
    manifold = inv.manifold()
    axes = inv.axes()
    mgrid = grid_on_submanifold(manifold, axes, inv.grid_nodes(axes), inv.fixed(), inv.threads)

    def dim_at(flat: int) -> int:
        if not mgrid.mask[flat]:
            return -1
        return characteristic_data(inv.structure, manifold, mgrid.points[flat], inv.tol_rank).dim

    dims = np.array(parallel_map(dim_at, range(len(mgrid.mask)), inv.threads))
    artifacts = ()
    if len(axes) == 2:
        artifacts = (_grid_artifact(inv.spec.name, axes, mgrid.grid.axis_values, dims.reshape(mgrid.shape)),)
    expected = _expected_dims(inv, mgrid.points)
    if expected is None:
        return CheckOutcome(True, None, f"特徵維度 {sorted(set(dims[mgrid.mask].tolist()))}", artifacts)
    mismatches = int(np.count_nonzero((dims != expected) & mgrid.mask))
    return CheckOutcome(
        mismatches == 0, float(mismatches),
        f"{mismatches}/{int(mgrid.mask.sum())} 節點不符", artifacts,
    )


def _trace(inv: CheckInvocation, manifold: Submanifold, p: np.ndarray, arc: float) -> np.ndarray:
    try:
        return trace_characteristic_leaf(inv.structure, manifold, p, arc_budget=arc, tol_rank=inv.tol_rank).points
    except (LeftDomainError, ProjectionError) as exc:
        partial = exc.partial
        return partial.points if partial is not None and len(partial) else p[None, :]


@register("char_trace", 1e-7)
def _char_trace(inv: CheckInvocation) -> CheckOutcome:
    manifold = inv.manifold()
    arc = inv.number("arc", 1.0)
    seeds = inv.on_manifold(manifold, count=5)
    traces = [_trace(inv, manifold, p, arc) for p in seeds]
    metric = max((manifold.residual(q) for trace in traces for q in trace), default=0.0)
    cloud = np.vstack(traces) if traces else np.zeros((0, inv.ctx.chart.dim))
    return CheckOutcome(
        _within(metric, inv.tolerance), metric, f"{len(seeds)} 條特徵葉，{len(cloud)} 點",
        (_cloud_artifact(inv.spec.name, inv.ctx.coords, cloud),),
    )


POLISH_TOL = 1e-13


def _polish(manifold: Submanifold, p: np.ndarray) -> np.ndarray:
    """把投影殘差壓到 POLISH_TOL；做不到時沿用原點。"""
    try:
        return manifold.project_to(p, tol=POLISH_TOL)
    except ProjectionError:
        return p


@register("vanishing_ideal", 1e-8)
def _vanishing_ideal(inv: CheckInvocation) -> CheckOutcome:
    """
    f = Σ a_k F_k、g = Σ b_k F_k 的 bracket 在 C 上。
    a_k、b_k 是 chart 正規化座標（各軸映到 [-1, 1]）的隨機二次多項式。
    """
    manifold = inv.manifold()
    defining = manifold.defining
    if not all(isinstance(F, ScalarField) for F in defining):
        raise ValueError("vanishing_ideal 需要以運算式定義的子流形")
    chart = inv.ctx.chart
    coords = inv.ctx.coords
    fields = [
        (2.0 / (hi - lo)) * (coordinate_field(name, coords) - 0.5 * (lo + hi))
        for name, lo, hi in zip(coords, chart.lower, chart.upper)
    ]
    probes = [_polish(manifold, p) for p in inv.sample_on(manifold, inv.integer("probes", 20))]

    def random_quadratic() -> ScalarField:
        total = constant_field(float(inv.rng.normal()), coords)
        for k, x in enumerate(fields):
            total = total + float(inv.rng.normal()) * x
            for y in fields[k:]:
                total = total + float(inv.rng.normal()) * (x * y)
        return total

    def combination() -> ScalarField:
        total = random_quadratic() * defining[0]
        for F in defining[1:]:
            total = total + random_quadratic() * F
        return total

    worst = 0.0
    pairs = inv.integer("pairs", 50)
    try:
        for _ in range(pairs):
            worst = max(worst, vanishing_ideal_bracket_check(inv.structure, manifold, combination(), combination(), probes))
    except NotVanishingError as exc:
        return CheckOutcome(False, None, str(exc))
    return CheckOutcome(_within(worst, inv.tolerance), worst, f"{pairs} 組 × {len(probes)} 探測點")


# =============================================================================
# Clean
# =============================================================================

def _classify(inv: CheckInvocation, manifold: Submanifold, p: np.ndarray) -> CleanVerdict:
    return classify(
        inv.structure, manifold, inv.ctx.atlas, p, inv.rng,
        tol_rank=inv.tol_rank,
        radius=inv.number("radius", LabDefaults.ESTIMATE_RADIUS),
        n_samples=inv.integer("samples", LabDefaults.ESTIMATE_SAMPLES),
    )


@register("clean_scan", 0.01)
def _clean_scan(inv: CheckInvocation) -> CheckOutcome:
    """
    metric = 1 − clean 比例（已判定節點）。不可出現 3×3 的 non_clean 區塊；
    `label = "expr" kind_zero kind_else` 時，判定結果不可與標籤相反，且一致比例 ≥ 99%。
    `box` 把掃描格點限制在 chart 的子 box 內。
    """
    ctx = inv.ctx
    manifold = inv.manifold()
    axes = inv.axes()
    box = inv.spec.first("box")
    window = box_chart(ctx.coords, _pairs(box)) if box is not None else None
    mgrid = grid_on_submanifold(manifold, axes, inv.grid_nodes(axes), inv.fixed(), inv.threads, window)
    scan = clean_locus_scan(
        inv.structure, manifold, ctx.atlas, mgrid,
        seed=int(inv.rng.integers(2**31)), threads=inv.threads, tol_rank=inv.tol_rank,
        radius=inv.number("radius", LabDefaults.ESTIMATE_RADIUS),
        n_samples=inv.integer("samples", LabDefaults.ESTIMATE_SAMPLES),
    )
    kinds = scan.kinds()
    codes = np.vectorize(lambda k: KIND_CODES.get(k, -1), otypes=[float])(kinds)
    artifacts = [
        _cloud_artifact(f"{inv.spec.name}-non-clean", ctx.coords, scan.non_clean_cloud(), mgrid.converged),
    ]
    if len(axes) == 2:
        artifacts.append(_grid_artifact(f"{inv.spec.name}-kinds", axes, mgrid.grid.axis_values, codes))

    metric = 1.0 - scan.clean_fraction
    passed = _within(metric, inv.tolerance) and not scan.has_open_block()
    notes = [f"{scan.classified} 節點，non_clean {scan.count('non_clean')}，undetermined {scan.undetermined}"]
    if scan.has_open_block():
        notes.append("出現 3×3 的 non_clean 區塊")

    label = inv.spec.first("label")
    if label is not None:
        expr = ctx.expression(label[0])
        flat = kinds.ravel()
        opposite = 0
        matched = 0
        for k, p in enumerate(mgrid.points):
            if not mgrid.mask[k]:
                continue
            expected = label[1] if abs(expr.eval(p)) <= ZERO_TOL else label[2]
            verdict = flat[k]
            if verdict == "undetermined":
                continue
            is_clean = verdict in ("transverse", "clean_non_transverse")
            expected_clean = expected != "non_clean"
            if is_clean != expected_clean:
                opposite += 1
            else:
                matched += 1
        ratio = matched / max(scan.classified, 1)
        notes.append(f"標籤一致 {ratio:.4f}，相反 {opposite}")
        passed = passed and opposite == 0 and ratio >= 0.99

    return CheckOutcome(passed, metric, "；".join(notes), tuple(artifacts))


@register("classify_point")
def _classify_point(inv: CheckInvocation) -> CheckOutcome:
    manifold = inv.manifold()
    expected = inv.text("kind")
    verdicts = [_classify(inv, manifold, p) for p in inv.on_manifold(manifold)]
    kinds = [v.kind for v in verdicts]
    mismatches = sum(1 for k in kinds if k not in (expected, "undetermined"))
    if mismatches == 0 and "undetermined" in kinds:
        return CheckOutcome(None, 0.0, f"結果 {kinds}")
    return CheckOutcome(mismatches == 0, float(mismatches), f"期待 {expected}，結果 {kinds}")


@register("classify_locus", 0.05)
def _classify_locus(inv: CheckInvocation) -> CheckOutcome:
    """start→stop 線段上 count 個點（排除 exclude）投影到 C 後分類；metric 為不符比例。"""
    manifold = inv.manifold()
    start = np.array(inv.numbers("start"))
    stop = np.array(inv.numbers("stop"))
    exclude = inv.spec.first("exclude")
    excluded = np.array([float(v) for v in exclude]) if exclude is not None else None
    expected = inv.text("kind")
    seeds = [start + s * (stop - start) for s in np.linspace(0.0, 1.0, inv.integer("count", 41))]
    if excluded is not None:
        seeds = [p for p in seeds if np.linalg.norm(p - excluded) > ZERO_TOL]
    points = [p if manifold.residual(p) <= LabDefaults.ON_SUBMANIFOLD_TOL else manifold.project_to(p) for p in seeds]
    kinds = [_classify(inv, manifold, p).kind for p in points]
    if not kinds:
        return CheckOutcome(None, None, "線段上沒有點")
    metric = sum(1 for k in kinds if k != expected) / len(kinds)
    return CheckOutcome(_within(metric, inv.tolerance), metric, f"{len(kinds)} 點，{expected} 比例 {1 - metric:.3f}")


def _clean_samples(inv: CheckInvocation, manifold: Submanifold) -> list[tuple[np.ndarray, CleanVerdict]]:
    """明確的點只保留 clean 的；取樣時補抽，直到湊滿 count 個 clean 點（最多補兩輪）。"""
    target = inv.integer("count", 200)
    candidates = inv.on_manifold(manifold, count=target)
    explicit = bool(inv.points())
    out: list[tuple[np.ndarray, CleanVerdict]] = []
    for _ in range(3):
        for p in candidates:
            verdict = _classify(inv, manifold, p)
            if verdict.is_clean:
                out.append((p, verdict))
            if len(out) >= target:
                return out
        if explicit:
            break
        candidates = inv.sample_on(manifold, target - len(out))
    return out


@register("leafwise_equivalence")
def _leafwise_equivalence(inv: CheckInvocation) -> CheckOutcome:
    """clean 點上：coisotropic ⇔ T_pC ∩ T_pL 在 T_pL 中 coisotropic。"""
    manifold = inv.manifold()
    samples = _clean_samples(inv, manifold)
    if not samples:
        return CheckOutcome(None, None, "沒有 clean 點")
    disagreements = 0
    for p, verdict in samples:
        ambient = bool(is_coisotropic_at(inv.structure, manifold, p))
        leafwise = leafwise_coisotropy_check(inv.structure, manifold, p, verdict, inv.tol_rank)
        disagreements += ambient != leafwise
    return CheckOutcome(disagreements == 0, float(disagreements), f"{len(samples)} 個 clean 點")


@register("char_coincidence")
def _char_coincidence(inv: CheckInvocation) -> CheckOutcome:
    """clean 點上：span Π^♯(dF) 與 W ∩ W^ω 一致。"""
    manifold = inv.manifold()
    samples = _clean_samples(inv, manifold)
    if not samples:
        return CheckOutcome(None, None, "沒有 clean 點")
    results = [characteristic_coincidence(inv.structure, manifold, p, inv.tol_rank) for p, _ in samples]
    failures = sum(1 for r in results if not r.coincide)
    angle = max(r.max_angle for r in results)
    return CheckOutcome(failures == 0, float(failures), f"{len(results)} 個 clean 點，最大主角 {angle:.3e}")


@register("char_uniformity")
def _char_uniformity(inv: CheckInvocation) -> CheckOutcome:
    """同一特徵葉上的點不可同時出現 clean 與 non_clean。"""
    manifold = inv.manifold()
    arc = inv.number("arc", 0.5)
    per_leaf = inv.integer("per_leaf", 5)
    mixed = 0
    seeds = inv.on_manifold(manifold, count=5)
    for p in seeds:
        trace = _trace(inv, manifold, p, arc)
        picks = trace[np.linspace(0, len(trace) - 1, min(per_leaf, len(trace))).round().astype(int)]
        kinds = {_classify(inv, manifold, q).kind for q in picks} - {"undetermined"}
        if "non_clean" in kinds and kinds & {"transverse", "clean_non_transverse"}:
            mixed += 1
    return CheckOutcome(mixed == 0, float(mixed), f"{len(seeds)} 條特徵葉，{mixed} 條混合")


# =============================================================================
# C0
# =============================================================================

@register("family_convergence")
def _family_convergence(inv: CheckInvocation) -> CheckOutcome:
    family = inv.ctx.family(inv.text("family"))
    if inv.tolerance is not None:
        family = replace(family, tolerance=inv.tolerance)
    box = family.compacts[0] if family.compacts else inv.ctx.chart
    probes = list(box.sample(inv.rng, inv.integer("probes", 20)))
    try:
        report = verify_family(inv.structure, family, probes, threads=inv.threads)
    except MemberNotPoissonError as exc:
        return CheckOutcome(False, None, str(exc))
    curve = Artifact("curve", inv.spec.name, {
        "x": list(report.indices), "y": list(report.distances), "x_label": family.index_param, "y_label": "d_K",
    })
    notes = "；".join(report.notes) or f"d_K {report.distances[-1]:.3e}"
    return CheckOutcome(report.passed, report.distances[-1], notes, (curve,))


@register("leafwise_symplectic", 1e-6)
def _leafwise_symplectic(inv: CheckInvocation) -> CheckOutcome:
    family = inv.ctx.family(inv.text("family"))
    indices = inv.numbers("indices", family.indices)
    box = family.compacts[0] if family.compacts else inv.ctx.chart
    probes = list(box.sample(inv.rng, inv.integer("probes", 20)))
    members = [family.member(n) for n in indices]
    defect = leafwise_symplectic_check(inv.structure, members, probes, tol_rank=inv.tol_rank)
    return CheckOutcome(_within(defect, inv.tolerance), defect, f"{len(members)} 成員 × {len(probes)} 點")


@register("leaf_mapping", 1e-6)
def _leaf_mapping(inv: CheckInvocation) -> CheckOutcome:
    limit = inv.ctx.limit_map(inv.text("map"), inv.number("t", 1.0))
    seeds = inv.seeds_in_box(10)
    groups = leaf_samples(inv.ctx.atlas, seeds, inv.rng, inv.integer("samples", 6), inv.number("spread", 0.1))
    tol = inv.tolerance if inv.tolerance is not None else 1e-6
    report = leaf_mapping_check(limit, inv.ctx.atlas, groups, tol=tol)
    details = "; ".join(f"組 {k}: {why}" for k, why in report.violations[:5])
    return CheckOutcome(report.passed, report.max_deviation, details or f"{report.groups} 組")


@register("char_image", LabDefaults.IMAGE_TOL)
def _char_image(inv: CheckInvocation) -> CheckOutcome:
    ctx = inv.ctx
    source = inv.manifold("source")
    target = inv.manifold("target") if inv.spec.first("target") else source
    limit = ctx.limit_map(inv.text("map"), inv.number("t", 1.0))
    seeds = inv.on_manifold(source, count=5)
    try:
        report = char_leaf_image_analysis(
            inv.structure, source, target, limit, seeds,
            arc_budget=inv.number("arc", 1.0),
            image_tol=inv.tolerance if inv.tolerance is not None else LabDefaults.IMAGE_TOL,
            tol_rank=inv.tol_rank,
        )
    except ImageOffTargetError as exc:
        return CheckOutcome(False, exc.residual, str(exc))
    passed = _within(report.max_residual, inv.tolerance)
    if inv.flag("expect_drop"):
        passed = passed and report.drops > 0
    if inv.flag("expect_jump"):
        passed = passed and report.jumps > 0
    summary = ", ".join(f"{leaf.source_dim}→{sorted(set(leaf.image_dims))}" for leaf in report.leaves)
    return CheckOutcome(passed, report.max_residual, f"drop {report.drops}，jump {report.jumps}：{summary}")


@register("preserves_submanifold", LabDefaults.IMAGE_TOL)
def _preserves_submanifold(inv: CheckInvocation) -> CheckOutcome:
    """‖F_target(φ^t(p))‖ 對 C 上的 p；像落在 chart 外時略過。"""
    ctx = inv.ctx
    manifold = inv.manifold()
    target = inv.manifold("target") if inv.spec.first("target") else manifold
    seeds = inv.on_manifold(manifold, count=50)
    worst = 0.0
    evaluated = 0
    for t in inv.numbers("t", (1.0,)):
        mapping = ctx.limit_map(inv.text("map"), t)
        for p in seeds:
            try:
                image = mapping.evaluate(p)
            except DomainError:
                continue
            if not ctx.chart.contains(image):
                continue
            worst = max(worst, target.residual(image))
            evaluated += 1
    if evaluated == 0:
        return CheckOutcome(None, None, "沒有可比較的像點")
    return CheckOutcome(_within(worst, inv.tolerance), worst, f"{evaluated} 個像點")


@register("c0_partition")
def _c0_partition(inv: CheckInvocation) -> CheckOutcome:
    """`generator = @flow [hamiltonian]`（可重複）；expect_cross 預設 true。"""
    ctx = inv.ctx
    manifold = inv.manifold()
    generators = []
    for tokens in inv.spec.values("generator"):
        hamiltonian = ctx.scalar(tokens[1]) if len(tokens) > 1 else None
        generators.append(C0Generator(ctx.flow(tokens[0]), hamiltonian))
    start = inv.points("start")
    if len(start) != 1:
        raise ValueError("c0_partition 需要恰好一個 start")
    probes = inv.sample_on(manifold, inv.integer("probes", 10))
    try:
        probe = c0_char_partition_probe(
            inv.structure, manifold, generators, start[0],
            budget=inv.integer("budget", 200),
            times=inv.numbers("times", (0.25,)),
            probes=probes,
            tol_rank=inv.tol_rank,
        )
    except (NotVanishingError, OffSubmanifoldError) as exc:
        return CheckOutcome(False, None, str(exc))
    expected = inv.flag("expect_cross", True)
    return CheckOutcome(
        probe.crosses == expected, float(probe.cloud_dim),
        f"{len(probe.cloud)} 點，葉維度 {probe.leaf_dim}，點雲維度 {probe.cloud_dim}，特徵維度 {list(probe.dims_seen)}",
        (_cloud_artifact(inv.spec.name, ctx.coords, probe.cloud),),
    )


@register("hameotopy", 1e-3)
def _hameotopy(inv: CheckInvocation) -> CheckOutcome:
    ctx = inv.ctx
    family = ctx.hameotopy(inv.text("hameotopy"))
    closed_ref = inv.spec.first("closed_form")
    closed = ctx.flow(closed_ref[0]) if closed_ref is not None else None
    seeds = list(family.support.sample(inv.rng, inv.integer("count", 10), margin=0.05))
    try:
        report = run_hameotopy(
            inv.structure, family, seeds, t=inv.number("t", 1.0), closed_form=closed,
            step=inv.number("step", LabDefaults.FLOW_STEP), threads=inv.threads,
        )
    except LeftDomainError as exc:
        return CheckOutcome(False, None, f"flow 離開 chart：{exc}")
    curve = Artifact("curve", inv.spec.name, {
        "x": list(report.indices[1:]), "y": list(report.gaps), "x_label": family.index_param, "y_label": "gap",
    })
    metric = report.closed_form_error if report.closed_form_error is not None else (report.gaps[-1] if report.gaps else 0.0)
    return CheckOutcome(_within(metric, inv.tolerance), metric, f"gaps {['%.2e' % g for g in report.gaps]}", (curve,))


@register("casimir_hameotopy", 1e-6)
def _casimir_hameotopy(inv: CheckInvocation) -> CheckOutcome:
    """
    極限 H 在葉上為常數 ⇔ hameotopy 為恆等映射；metric 為位移。
    `casimir = true/false` 另外指定預期的一側。
    """
    ctx = inv.ctx
    family = ctx.hameotopy(inv.text("hameotopy"))
    seeds = list(family.support.sample(inv.rng, inv.integer("count", 10), margin=0.05))
    groups = leaf_samples(ctx.atlas, seeds, inv.rng, inv.integer("samples", 6), inv.number("spread", 0.1))
    tol = inv.tolerance if inv.tolerance is not None else 1e-6
    try:
        report = casimir_hameotopy_check(
            inv.structure, family, groups, seeds,
            times=inv.numbers("t", (0.5, 1.0)),
            step=inv.number("step", LabDefaults.FLOW_STEP),
            threads=inv.threads, tol=tol,
        )
    except LeftDomainError as exc:
        return CheckOutcome(False, None, f"flow 離開 chart：{exc}")
    passed = report.consistent
    expected = inv.spec.first("casimir")
    if expected is not None:
        passed = passed and report.is_casimir == inv.flag("casimir")
    return CheckOutcome(
        passed, report.displacement,
        f"葉上變化 {report.casimir_defect:.3e}（Casimir={report.is_casimir}），"
        f"位移 {report.displacement:.3e}（恆等={report.is_identity}）",
    )


def run_op(inv: CheckInvocation) -> CheckOutcome:
    """
    Raises:
        KeyError: 未註冊的 op
    """
    try:
        registered = CHECK_OPS[inv.spec.op]
    except KeyError:
        raise KeyError(f"未知的 op {inv.spec.op!r}；可用：{available_ops()}") from None
    _logger.debug(f"執行 {inv.spec.name!r}（op={inv.spec.op}，tolerance={inv.tolerance}）")
    return registered.fn(inv)


def default_tolerance(op: str) -> float | None:
    registered = CHECK_OPS.get(op)
    return registered.default_tolerance if registered is not None else None


__all__ = [
    "CHECK_OPS",
    "CheckInvocation",
    "CheckOutcome",
    "available_ops",
    "default_tolerance",
    "register",
    "run_op",
]

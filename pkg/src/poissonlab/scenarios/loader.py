"""
Scenario 文字格式的讀寫

格式（INI 風格，key 可重複，值以 shell 規則切成 token）:

    # 註解
    [scenario]
    name = cubic-graph
    params = n t

    [chart]
    coord = x -1 1

    [poisson]
    entry = x y "1"

    [submanifold C]
    equation = "z - x^3"

    [check coiso-C]
    op = coisotropy
    manifold = @C

運算式以雙引號包住；以 @ 開頭的 token 是具名參照。
讀取時會解析每一個運算式並檢查參照，錯誤附帶行號。
"""

from __future__ import annotations

import re
import shlex
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from poissonlab.core.errors import (
    ExpressionSyntaxError,
    ScenarioParseError,
    UnknownIdentifierError,
    UnknownScenarioError,
    UnresolvedReferenceError,
)
from poissonlab.exprcore.api import parse
from poissonlab.utils.logger import get_logger

from .model import (
    Box,
    CheckSpec,
    CoordSpec,
    FamilySpec,
    FlowSpecText,
    HameotopySpec,
    ImplicitSpec,
    PoissonEntry,
    RegionSpec,
    Scenario,
    ShearSpec,
    SubmanifoldSpec,
    is_reference,
)

_logger = get_logger("scenarios.loader")

SCENARIO_SUFFIX = ".scn"
BUILTIN_PACKAGE = "poissonlab.scenarios.builtins"

_BARE_TOKEN = re.compile(r"[A-Za-z0-9_.@+\-]+")
_HEADER = re.compile(r"^\[\s*([A-Za-z_]+)(?:\s+([A-Za-z0-9_.\-]+))?\s*\]$")

_NAMED_SECTIONS = ("submanifold", "region", "implicit", "flow", "shear", "family", "hameotopy", "check")
_CHECK_RESERVED = ("op", "tolerance", "expect")


# =============================================================================
# 原始段落
# =============================================================================

@dataclass
class _Entry:
    key: str
    tokens: tuple[str, ...]
    line: int


@dataclass
class _Section:
    kind: str
    name: str | None
    line: int
    entries: list[_Entry] = field(default_factory=list)

    def all(self, key: str) -> list[_Entry]:
        return [e for e in self.entries if e.key == key]

    def one(self, key: str, required: bool = False) -> _Entry | None:
        found = self.all(key)
        if len(found) > 1:
            raise ScenarioParseError(f"[{self.kind}] 的 {key!r} 只能出現一次", found[1].line)
        if not found:
            if required:
                raise ScenarioParseError(f"[{self.kind}] 缺少 {key!r}", self.line)
            return None
        return found[0]

    def reject_unknown(self, allowed: Iterable[str]) -> None:
        allowed = set(allowed)
        for entry in self.entries:
            if entry.key not in allowed:
                raise ScenarioParseError(f"[{self.kind}] 不認得的鍵 {entry.key!r}", entry.line)


def _split_sections(text: str) -> list[_Section]:
    sections: list[_Section] = []
    current: _Section | None = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            match = _HEADER.match(line)
            if match is None:
                raise ScenarioParseError(f"無法解析的段落標頭 {line!r}", number)
            kind, name = match.group(1), match.group(2)
            if kind in _NAMED_SECTIONS and name is None:
                raise ScenarioParseError(f"[{kind}] 需要名稱", number)
            if kind not in _NAMED_SECTIONS and name is not None:
                raise ScenarioParseError(f"[{kind}] 不接受名稱", number)
            current = _Section(kind, name, number)
            sections.append(current)
            continue
        if current is None:
            raise ScenarioParseError("鍵值出現在任何段落之前", number)
        key, sep, rest = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ScenarioParseError(f"預期 'key = value'，收到 {line!r}", number)
        try:
            tokens = tuple(shlex.split(rest))
        except ValueError as exc:
            raise ScenarioParseError(f"無法切分值：{exc}", number) from exc
        current.entries.append(_Entry(key, tokens, number))
    return sections


# =============================================================================
# 轉換與驗證
# =============================================================================

def _single(entry: _Entry) -> str:
    if len(entry.tokens) != 1:
        raise ScenarioParseError(f"{entry.key!r} 需要恰好一個值", entry.line)
    return entry.tokens[0]


def _floats(entry: _Entry, count: int | None = None) -> tuple[float, ...]:
    try:
        values = tuple(float(t) for t in entry.tokens)
    except ValueError as exc:
        raise ScenarioParseError(f"{entry.key!r} 需要數值：{exc}", entry.line) from exc
    if count is not None and len(values) != count:
        raise ScenarioParseError(f"{entry.key!r} 需要 {count} 個數值，收到 {len(values)}", entry.line)
    return values


def _int(entry: _Entry) -> int:
    try:
        return int(_single(entry))
    except ValueError as exc:
        raise ScenarioParseError(f"{entry.key!r} 需要整數", entry.line) from exc


def _box(entry: _Entry, dim: int) -> Box:
    values = _floats(entry, 2 * dim)
    return tuple((values[2 * k], values[2 * k + 1]) for k in range(dim))


class _Resolver:
    """解析運算式並檢查 @參照（記錄行號）。"""

    def __init__(self, coords: Sequence[str], params: Sequence[str]):
        self.coords = tuple(coords)
        self.params = tuple(params)
        self.names: dict[str, set[str]] = {}
        self.pending: list[tuple[str, int, tuple[str, ...]]] = []

    def declare(self, kind: str, name: str, line: int) -> None:
        bucket = self.names.setdefault(kind, set())
        if name in bucket:
            raise ScenarioParseError(f"重複的 [{kind} {name}]", line)
        bucket.add(name)

    def expression(self, text: str, line: int, coords: Sequence[str] | None = None) -> str:
        try:
            parse(text, coords if coords is not None else self.coords, self.params)
        except UnknownIdentifierError as exc:
            raise UnresolvedReferenceError(exc.name, line) from exc
        except ExpressionSyntaxError as exc:
            raise ScenarioParseError(str(exc), line) from exc
        return text

    def scalar(self, text: str, line: int) -> str:
        """運算式或 @implicit。"""
        if is_reference(text):
            self.pending.append((text, line, ("implicit",)))
            return text
        return self.expression(text, line)

    def reference(self, text: str, line: int, kinds: tuple[str, ...]) -> str:
        if not is_reference(text):
            raise ScenarioParseError(f"預期 @參照，收到 {text!r}", line)
        self.pending.append((text, line, kinds))
        return text

    def coordinate(self, name: str, line: int) -> str:
        if name not in self.coords:
            raise UnresolvedReferenceError(name, line)
        return name

    def finish(self) -> None:
        for text, line, kinds in self.pending:
            name = text[1:]
            if not any(name in self.names.get(kind, ()) for kind in kinds):
                raise UnresolvedReferenceError(text, line)


def _build(sections: list[_Section]) -> Scenario:
    heads = [s for s in sections if s.kind == "scenario"]
    charts = [s for s in sections if s.kind == "chart"]
    if len(heads) != 1:
        raise ScenarioParseError("需要恰好一個 [scenario] 段落", heads[1].line if heads else 1)
    if len(charts) != 1:
        raise ScenarioParseError("需要恰好一個 [chart] 段落", charts[1].line if charts else 1)
    head, chart = heads[0], charts[0]

    head.reject_unknown(("name", "description", "seed", "params", "plot"))
    name = _single(head.one("name", required=True))  # type: ignore[arg-type]
    description_entry = head.one("description")
    description = " ".join(description_entry.tokens) if description_entry else ""
    seed_entry = head.one("seed")
    seed = _int(seed_entry) if seed_entry else 0
    params_entry = head.one("params")
    params = params_entry.tokens if params_entry else ()

    chart.reject_unknown(("coord",))
    coords: list[CoordSpec] = []
    for entry in chart.all("coord"):
        if len(entry.tokens) != 3:
            raise ScenarioParseError("coord 需要 'name lo hi'", entry.line)
        lo, hi = _floats(_Entry(entry.key, entry.tokens[1:], entry.line), 2)
        coords.append(CoordSpec(entry.tokens[0], lo, hi))
    if not coords:
        raise ScenarioParseError("[chart] 至少需要一個 coord", chart.line)
    coord_names = tuple(c.name for c in coords)
    if len(set(coord_names)) != len(coord_names):
        raise ScenarioParseError(f"座標名稱重複：{coord_names}", chart.line)
    overlap = set(coord_names) & set(params)
    if overlap:
        raise ScenarioParseError(f"參數與座標同名：{sorted(overlap)}", head.line)

    resolver = _Resolver(coord_names, params)
    plot_entry = head.one("plot")
    plot = tuple(resolver.coordinate(t, plot_entry.line) for t in plot_entry.tokens) if plot_entry else ()

    poisson: list[PoissonEntry] = []
    submanifolds: list[SubmanifoldSpec] = []
    regions: list[RegionSpec] = []
    implicits: list[ImplicitSpec] = []
    flows: list[FlowSpecText] = []
    shears: list[ShearSpec] = []
    families: list[FamilySpec] = []
    hameotopies: list[HameotopySpec] = []
    checks: list[CheckSpec] = []
    dim = len(coords)

    for section in sections:
        kind, label = section.kind, section.name or ""
        if kind in ("scenario", "chart"):
            continue
        if kind in _NAMED_SECTIONS:
            resolver.declare(kind, label, section.line)

        if kind == "poisson":
            section.reject_unknown(("entry",))
            for entry in section.all("entry"):
                if len(entry.tokens) != 3:
                    raise ScenarioParseError("entry 需要 'a b expr'", entry.line)
                a, b, text = entry.tokens
                resolver.coordinate(a, entry.line)
                resolver.coordinate(b, entry.line)
                poisson.append(PoissonEntry(a, b, resolver.expression(text, entry.line)))

        elif kind == "submanifold":
            section.reject_unknown(("equation",))
            equations = tuple(resolver.scalar(_single(e), e.line) for e in section.all("equation"))
            if not equations:
                raise ScenarioParseError(f"[submanifold {label}] 至少需要一個 equation", section.line)
            submanifolds.append(SubmanifoldSpec(label, equations))

        elif kind == "region":
            section.reject_unknown(("rank", "membership", "invariant"))
            rank_entry = section.one("rank")
            membership_entry = section.one("membership")
            regions.append(RegionSpec(
                label,
                rank=_int(rank_entry) if rank_entry else None,
                membership=(resolver.scalar(_single(membership_entry), membership_entry.line)
                            if membership_entry else None),
                invariants=tuple(resolver.scalar(_single(e), e.line) for e in section.all("invariant")),
            ))

        elif kind == "implicit":
            section.reject_unknown(("unknown", "equation", "offset", "scale"))
            unknown = _single(section.one("unknown", required=True))  # type: ignore[arg-type]
            if unknown in coord_names or unknown in params:
                raise ScenarioParseError(f"未知數 {unknown!r} 與座標或參數同名", section.line)
            equation_entry = section.one("equation", required=True)
            assert equation_entry is not None
            equation = resolver.expression(_single(equation_entry), equation_entry.line, (unknown,) + coord_names)
            offset_entry = section.one("offset")
            scale_entry = section.one("scale")
            implicits.append(ImplicitSpec(
                label, unknown, equation,
                offset=resolver.expression(_single(offset_entry), offset_entry.line) if offset_entry else None,
                scale=_floats(scale_entry, 1)[0] if scale_entry else 1.0,
            ))

        elif kind == "flow":
            section.reject_unknown(("component", "time"))
            time_entry = section.one("time")
            components = tuple(resolver.expression(_single(e), e.line) for e in section.all("component"))
            if len(components) != dim:
                raise ScenarioParseError(f"[flow {label}] 需要 {dim} 個 component", section.line)
            flows.append(FlowSpecText(label, components, _single(time_entry) if time_entry else "t"))

        elif kind == "shear":
            section.reject_unknown(("g", "along", "shear", "drift", "factor", "wrt"))
            g_entry = section.one("g", required=True)
            assert g_entry is not None
            optional = {}
            for key in ("drift", "factor", "wrt"):
                entry = section.one(key)
                if entry is None:
                    continue
                value = _single(entry)
                optional[key] = resolver.scalar(value, entry.line) if key == "factor" else resolver.coordinate(value, entry.line)
            along_entry = section.one("along", required=True)
            shear_entry = section.one("shear", required=True)
            assert along_entry is not None and shear_entry is not None
            shears.append(ShearSpec(
                label,
                g=resolver.scalar(_single(g_entry), g_entry.line),
                along=resolver.coordinate(_single(along_entry), along_entry.line),
                shear=resolver.coordinate(_single(shear_entry), shear_entry.line),
                **optional,
            ))

        elif kind == "family":
            section.reject_unknown(("component", "limit", "compact", "index", "indices", "tolerance", "nodes"))
            components = tuple(resolver.scalar(_single(e), e.line) for e in section.all("component"))
            limit = tuple(resolver.scalar(_single(e), e.line) for e in section.all("limit"))
            if len(components) != dim or len(limit) != dim:
                raise ScenarioParseError(f"[family {label}] 需要 {dim} 個 component 與 limit", section.line)
            index_entry = section.one("index")
            indices_entry = section.one("indices")
            tolerance_entry = section.one("tolerance")
            nodes_entry = section.one("nodes")
            families.append(FamilySpec(
                label, components, limit,
                compacts=tuple(_box(e, dim) for e in section.all("compact")),
                index_param=_single(index_entry) if index_entry else "n",
                indices=_floats(indices_entry) if indices_entry else (),
                tolerance=_floats(tolerance_entry, 1)[0] if tolerance_entry else 1e-2,
                nodes=_int(nodes_entry) if nodes_entry else 21,
            ))

        elif kind == "hameotopy":
            section.reject_unknown(("hamiltonian", "limit", "index", "time", "indices", "support"))
            h_entry = section.one("hamiltonian", required=True)
            assert h_entry is not None
            limit_entry = section.one("limit")
            index_entry = section.one("index")
            time_entry = section.one("time")
            indices_entry = section.one("indices")
            support_entry = section.one("support")
            hameotopies.append(HameotopySpec(
                label,
                hamiltonian=resolver.scalar(_single(h_entry), h_entry.line),
                limit=resolver.scalar(_single(limit_entry), limit_entry.line) if limit_entry else None,
                index_param=_single(index_entry) if index_entry else "n",
                time_param=_single(time_entry) if time_entry else None,
                indices=_floats(indices_entry) if indices_entry else (),
                support=_box(support_entry, dim) if support_entry else None,
            ))

        elif kind == "check":
            op_entry = section.one("op", required=True)
            assert op_entry is not None
            tolerance_entry = section.one("tolerance")
            expect_entry = section.one("expect")
            expect = _single(expect_entry) if expect_entry else "pass"
            if expect not in ("pass", "fail"):
                raise ScenarioParseError(f"expect 只接受 pass 或 fail，收到 {expect!r}", expect_entry.line)  # type: ignore[union-attr]
            args = []
            for entry in section.entries:
                if entry.key in _CHECK_RESERVED:
                    continue
                for token in entry.tokens:
                    if is_reference(token):
                        resolver.reference(token, entry.line, _NAMED_SECTIONS)
                args.append((entry.key, entry.tokens))
            checks.append(CheckSpec(
                label,
                op=_single(op_entry),
                tolerance=_floats(tolerance_entry, 1)[0] if tolerance_entry else None,
                expect=expect,  # type: ignore[arg-type]
                args=tuple(args),
            ))

        else:
            raise ScenarioParseError(f"不認得的段落 [{kind}]", section.line)

    resolver.finish()
    return Scenario(
        name=name,
        coords=tuple(coords),
        description=description,
        seed=seed,
        params=tuple(params),
        plot=plot,
        poisson=tuple(poisson),
        submanifolds=tuple(submanifolds),
        regions=tuple(regions),
        implicits=tuple(implicits),
        flows=tuple(flows),
        shears=tuple(shears),
        families=tuple(families),
        hameotopies=tuple(hameotopies),
        checks=tuple(checks),
    )


# =============================================================================
# 公開 API
# =============================================================================

def loads(text: str) -> Scenario:
    """
    由文字解析 scenario

    Raises:
        ScenarioParseError: 格式錯誤（附行號）
        UnresolvedReferenceError: 未知的識別字或 @參照
    """
    return _build(_split_sections(text))


def load(path: str | Path) -> Scenario:
    path = Path(path)
    scenario = loads(path.read_text(encoding="utf-8"))
    _logger.debug(f"載入 scenario {scenario.name!r}（{path}）")
    return scenario


def _quote(token: str) -> str:
    if _BARE_TOKEN.fullmatch(token):
        return token
    if '"' in token or "\\" in token:
        raise ValueError(f"token 不可包含引號或反斜線：{token!r}")
    return f'"{token}"'


def _number(value: float) -> str:
    return repr(float(value))


def _line(key: str, tokens: Iterable[str]) -> str:
    return f"{key} = " + " ".join(_quote(t) for t in tokens)


def _box_tokens(box: Box) -> list[str]:
    return [_number(v) for pair in box for v in pair]


def dumps(scenario: Scenario) -> str:
    """序列化成文字；loads(dumps(s)) == s。"""
    out: list[str] = ["[scenario]", _line("name", [scenario.name])]
    if scenario.description:
        out.append(_line("description", [scenario.description]))
    out.append(_line("seed", [str(scenario.seed)]))
    if scenario.params:
        out.append(_line("params", scenario.params))
    if scenario.plot:
        out.append(_line("plot", scenario.plot))

    out += ["", "[chart]"]
    out += [_line("coord", [c.name, _number(c.lower), _number(c.upper)]) for c in scenario.coords]

    if scenario.poisson:
        out += ["", "[poisson]"]
        out += [_line("entry", [e.a, e.b, e.expr]) for e in scenario.poisson]

    for sub in scenario.submanifolds:
        out += ["", f"[submanifold {sub.name}]"]
        out += [_line("equation", [eq]) for eq in sub.equations]

    for region in scenario.regions:
        out += ["", f"[region {region.name}]"]
        if region.rank is not None:
            out.append(_line("rank", [str(region.rank)]))
        if region.membership is not None:
            out.append(_line("membership", [region.membership]))
        out += [_line("invariant", [inv]) for inv in region.invariants]

    for imp in scenario.implicits:
        out += ["", f"[implicit {imp.name}]", _line("unknown", [imp.unknown]), _line("equation", [imp.equation])]
        if imp.offset is not None:
            out.append(_line("offset", [imp.offset]))
        out.append(_line("scale", [_number(imp.scale)]))

    for flow in scenario.flows:
        out += ["", f"[flow {flow.name}]"]
        out += [_line("component", [c]) for c in flow.components]
        out.append(_line("time", [flow.time_param]))

    for shear in scenario.shears:
        out += ["", f"[shear {shear.name}]", _line("g", [shear.g]),
                _line("along", [shear.along]), _line("shear", [shear.shear])]
        for key in ("drift", "factor", "wrt"):
            value = getattr(shear, key)
            if value is not None:
                out.append(_line(key, [value]))

    for fam in scenario.families:
        out += ["", f"[family {fam.name}]"]
        out += [_line("component", [c]) for c in fam.components]
        out += [_line("limit", [c]) for c in fam.limit]
        out += [_line("compact", _box_tokens(box)) for box in fam.compacts]
        out.append(_line("index", [fam.index_param]))
        if fam.indices:
            out.append(_line("indices", [_number(v) for v in fam.indices]))
        out.append(_line("tolerance", [_number(fam.tolerance)]))
        out.append(_line("nodes", [str(fam.nodes)]))

    for ham in scenario.hameotopies:
        out += ["", f"[hameotopy {ham.name}]", _line("hamiltonian", [ham.hamiltonian])]
        if ham.limit is not None:
            out.append(_line("limit", [ham.limit]))
        out.append(_line("index", [ham.index_param]))
        if ham.time_param is not None:
            out.append(_line("time", [ham.time_param]))
        if ham.indices:
            out.append(_line("indices", [_number(v) for v in ham.indices]))
        if ham.support is not None:
            out.append(_line("support", _box_tokens(ham.support)))

    for check in scenario.checks:
        out += ["", f"[check {check.name}]", _line("op", [check.op])]
        if check.tolerance is not None:
            out.append(_line("tolerance", [_number(check.tolerance)]))
        if check.expect != "pass":
            out.append(_line("expect", [check.expect]))
        out += [_line(key, tokens) for key, tokens in check.args]

    return "\n".join(out) + "\n"


def save(scenario: Scenario, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(dumps(scenario), encoding="utf-8")
    return path


def list_builtins() -> list[str]:
    """內建 scenario 名稱（排序）。"""
    root = resources.files(BUILTIN_PACKAGE)
    return sorted(
        entry.name[: -len(SCENARIO_SUFFIX)]
        for entry in root.iterdir()
        if entry.name.endswith(SCENARIO_SUFFIX)
    )


@lru_cache(maxsize=None)
def builtin(name: str) -> Scenario:
    """
    載入內建 scenario

    Raises:
        UnknownScenarioError: 名稱不存在
    """
    resource = resources.files(BUILTIN_PACKAGE) / f"{name}{SCENARIO_SUFFIX}"
    if not resource.is_file():
        raise UnknownScenarioError(name, list_builtins())
    return loads(resource.read_text(encoding="utf-8"))


def resolve(name_or_path: str | Path) -> Scenario:
    """內建名稱或檔案路徑。"""
    path = Path(name_or_path)
    if path.suffix == SCENARIO_SUFFIX or path.exists():
        return load(path)
    return builtin(str(name_or_path))

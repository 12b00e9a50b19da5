"""
報告輸出：JSON / CSV / SVG

- JSON：穩定的 schema（scenario、seed、checks[name, op, status, metric, tolerance, runtime_ms, message]、
  artifacts、warnings）；include_runtime=False 時 runtime_ms 一律為 0，輸出逐位元組可重現
- CSV：checks 一份，每個 artifact 一份
- SVG：每個 artifact 一張圖（matplotlib，固定 hashsalt、不寫入日期）
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import matplotlib
from matplotlib.figure import Figure

from poissonlab.utils.logger import get_logger

from .model import Artifact, Report

_logger = get_logger("scenarios.emit")

FORMATS = ("json", "csv", "svg")
SVG_SALT = "poissonlab"
NON_CLEAN_COLOR = "tab:orange"
BACKGROUND_COLOR = "tab:blue"


def _finite(value: Any) -> Any:
    """JSON 不接受 NaN/inf：轉成 None。"""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value


def report_to_dict(report: Report, include_runtime: bool = True) -> dict[str, Any]:
    return _finite({
        "scenario": report.scenario,
        "seed": report.seed,
        "checks": [
            {
                "name": c.name,
                "op": c.op,
                "status": c.status,
                "metric": c.metric,
                "tolerance": c.tolerance,
                "runtime_ms": c.runtime_ms if include_runtime else 0,
                "message": c.message,
            }
            for c in report.checks
        ],
        "artifacts": [{"kind": a.kind, "name": a.name, "data": a.data} for a in report.artifacts],
        "warnings": list(report.warnings),
    })


def report_to_json(report: Report, include_runtime: bool = True) -> str:
    return json.dumps(report_to_dict(report, include_runtime), ensure_ascii=False, indent=2, allow_nan=False) + "\n"


# =============================================================================
# CSV
# =============================================================================

def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _artifact_rows(artifact: Artifact) -> tuple[list[str], list[list[Any]]]:
    data = artifact.data
    if artifact.kind == "grid":
        a, b = data["axes"]
        rows = [
            [x, y, data["values"][i][j]]
            for i, x in enumerate(data["x"])
            for j, y in enumerate(data["y"])
        ]
        return [a, b, "value"], rows
    if artifact.kind == "cloud":
        return list(data["coords"]), [list(p) for p in data["points"]]
    return [data.get("x_label", "x"), data.get("y_label", "y")], [list(r) for r in zip(data["x"], data["y"])]


def write_csv(report: Report, out_dir: Path, include_runtime: bool = True) -> list[Path]:
    paths = [_write_rows(
        out_dir / f"{report.scenario}-checks.csv",
        ["name", "op", "status", "metric", "tolerance", "runtime_ms", "message"],
        ([c.name, c.op, c.status, c.metric, c.tolerance, c.runtime_ms if include_runtime else 0, c.message]
         for c in report.checks),
    )]
    for artifact in report.artifacts:
        header, rows = _artifact_rows(artifact)
        paths.append(_write_rows(out_dir / f"{report.scenario}-{artifact.name}.csv", header, rows))
    return paths


# =============================================================================
# SVG
# =============================================================================

def _plot_indices(coords: Sequence[str], plot: Sequence[str]) -> tuple[int, int]:
    if len(plot) >= 2 and plot[0] in coords and plot[1] in coords:
        return coords.index(plot[0]), coords.index(plot[1])
    return 0, min(1, len(coords) - 1)


def _draw(figure: Figure, artifact: Artifact, plot: Sequence[str]) -> None:
    ax = figure.add_subplot(1, 1, 1)
    data = artifact.data
    ax.set_title(artifact.name)
    if artifact.kind == "grid":
        a, b = data["axes"]
        # values[i][j] 對應 (x_i, y_j)：畫圖時 x 為橫軸
        values = list(map(list, zip(*data["values"])))
        mesh = ax.pcolormesh(data["x"], data["y"], values, shading="nearest", cmap="viridis")
        figure.colorbar(mesh, ax=ax)
        ax.set_xlabel(a)
        ax.set_ylabel(b)
    elif artifact.kind == "cloud":
        coords = list(data["coords"])
        i, j = _plot_indices(coords, plot)
        background = data.get("background") or []
        if background:
            ax.scatter([p[i] for p in background], [p[j] for p in background], s=2, c=BACKGROUND_COLOR, label="clean")
        points = data["points"]
        ax.scatter([p[i] for p in points], [p[j] for p in points], s=6, c=NON_CLEAN_COLOR,
                   label="non-clean" if background else "samples")
        ax.set_xlabel(coords[i])
        ax.set_ylabel(coords[j])
        ax.legend(loc="best")
    else:
        ax.plot(data["x"], data["y"], marker="o")
        if all(v > 0 for v in data["x"]):
            ax.set_xscale("log")
        if data["y"] and all(v > 0 for v in data["y"]):
            ax.set_yscale("log")
        ax.set_xlabel(data.get("x_label", "x"))
        ax.set_ylabel(data.get("y_label", "y"))


def write_svg(report: Report, out_dir: Path) -> list[Path]:
    paths = []
    with matplotlib.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "none"}):
        for artifact in report.artifacts:
            figure = Figure(figsize=(6, 5))
            _draw(figure, artifact, report.plot)
            path = out_dir / f"{report.scenario}-{artifact.name}.svg"
            figure.savefig(path, format="svg", metadata={"Date": None})
            paths.append(path)
    return paths


def emit(
    report: Report,
    out_dir: str | Path,
    formats: Sequence[str] = FORMATS,
    include_runtime: bool = True,
) -> list[Path]:
    """
    寫出報告；回傳所有檔案路徑。

    Raises:
        ValueError: 未知的格式
    """
    unknown = [f for f in formats if f not in FORMATS]
    if unknown:
        raise ValueError(f"未知的輸出格式 {unknown}；可用：{list(FORMATS)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: list[Path] = []
    if "json" in formats:
        path = out / f"{report.scenario}.json"
        path.write_text(report_to_json(report, include_runtime), encoding="utf-8")
        paths.append(path)
    if "csv" in formats:
        paths.extend(write_csv(report, out, include_runtime))
    if "svg" in formats:
        paths.extend(write_svg(report, out))
    _logger.debug(f"寫出 {len(paths)} 個檔案到 {out}")
    return paths

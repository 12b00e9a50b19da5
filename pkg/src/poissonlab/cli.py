"""
poissonlab 命令列介面

子命令：
    run <scenario 名稱或路徑> [--grid N] [--tol-rank X] [--tol X] [--seed S]
        [--out DIR] [--formats json,csv,svg] [--check NAME]* [--threads K] [--verbose]
    list                  列出內建 scenario 與一行說明
    validate <path>       只解析，不執行

結束碼：0 全部通過；1 有 check 失敗；2 基礎設施錯誤（解析、I/O、check error）
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from poissonlab.core.errors import PoissonLabError
from poissonlab.utils.logger import setup_logger

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_ERROR = 2


def _formats(text: str) -> tuple[str, ...]:
    formats = tuple(part.strip() for part in text.split(",") if part.strip())
    if not formats:
        raise argparse.ArgumentTypeError("至少需要一種輸出格式")
    return formats


def _build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="poissonlab",
        description="以容差判定的 Poisson 幾何數值實驗（scenario）。",
    )
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="執行 scenario 並輸出報告")
    run.add_argument("scenario", help="內建 scenario 名稱或 .scn 檔案路徑")
    run.add_argument("--grid", type=int, default=None, help="每軸網格節點數（取代 scenario 宣告）")
    run.add_argument("--tol-rank", type=float, default=None, help="數值秩的相對容差（預設 1e-8）")
    run.add_argument("--tol", type=float, default=None, help="全域容差，取代每個 check 的 tolerance")
    run.add_argument("--seed", type=int, default=None, help="亂數種子（預設用 scenario 宣告的 seed）")
    run.add_argument("--out", default=None, help="報告輸出目錄（未指定時只印摘要）")
    run.add_argument("--formats", type=_formats, default=("json", "csv", "svg"),
                     help="輸出格式，逗號分隔（預設：json,csv,svg）")
    run.add_argument("--check", action="append", default=[], help="只執行指定的 check（可重複指定）")
    run.add_argument("--threads", type=int, default=None, help="worker 數量（預設讀 POISSONLAB_THREADS）")
    run.add_argument("-v", "--verbose", action="store_true", help="輸出 DEBUG 日誌")

    sub.add_parser("list", help="列出內建 scenario")

    validate = sub.add_parser("validate", help="只解析 scenario 檔案")
    validate.add_argument("path", help=".scn 檔案路徑")
    return p


def _cmd_list() -> int:
    from poissonlab.scenarios.loader import builtin, list_builtins

    for name in list_builtins():
        print(f"{name:<24} {builtin(name).description}")
    return EXIT_OK


def _cmd_validate(path: str) -> int:
    from poissonlab.scenarios.loader import load

    try:
        scenario = load(path)
    except OSError as exc:
        print(f"無法讀取 {path}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except PoissonLabError as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"{scenario.name}: {len(scenario.coords)} 維，{len(scenario.checks)} 個 check")
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    from poissonlab.scenarios.engine import ScenarioEngine

    overrides = {
        "grid": args.grid,
        "tol_rank": args.tol_rank,
        "tol": args.tol,
        "seed": args.seed,
        "checks": args.check,
        "threads": args.threads,
    }
    try:
        engine = ScenarioEngine(verbose=args.verbose)
        report = engine.run(args.scenario, overrides=overrides)
        if args.out:
            engine.emit(report, args.out, formats=args.formats)
    except (PoissonLabError, ValueError, KeyError, OSError) as exc:
        print(f"錯誤：{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR

    for record in report.checks:
        metric = "-" if record.metric is None else f"{record.metric:.3e}"
        print(f"{record.status:<13} {record.name:<28} metric={metric} {record.message}")
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    counts = report.status_counts()
    print(", ".join(f"{status} {count}" for status, count in counts.items()))
    return report.exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_arg_parser()
    args = parser.parse_args(list(argv) if argv is not None else None)

    verbose = getattr(args, "verbose", False)
    setup_logger(level=logging.DEBUG if verbose else logging.WARNING)

    if args.command == "list":
        return _cmd_list()
    if args.command == "validate":
        return _cmd_validate(args.path)
    return _cmd_run(args)


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())

"""
運算式解析與 scenario 效能基準

目的：
- 比較解析快取的冷/熱狀態（clear_cache 前後）
- 以 ScenarioEngine 的 on_timing 回呼量測每個內建 scenario，並比較不同 worker 數

使用方式：
    uv run python ./tools/benchmark_scenarios.py [--grid N] [--threads 1,4]

注意：
- 「冷啟動」在此指「冷快取」（clear_cache 後），不是 OS/進程層級冷啟動
- 網格預設縮小為 11，讓整輪基準在一般筆電上幾十秒內跑完
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path
from typing import Callable

# 讓此腳本可在「未安裝套件」的情況下直接從 repo 執行（uv run / python）
REPO_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO_ROOT / "src"))

EXPRESSIONS = [
    "z - x^3",
    "x^2 + y^2",
    "y*z^2",
    "exp(x)*y - z^2",
    "cbrt(z + y)",
    "sin(x)*cos(y) + z",
    "smoothstep(x)*(1 - y^2)",
    "(z - x^3)*(y + 2)",
]
COORDS = ("x", "y", "z")


def benchmark_parse(parse_func: Callable[[str], object], name: str, iterations: int = 1) -> float:
    """
    測試解析函式的效能。

    Returns:
        float: 平均每個運算式的解析時間（毫秒）
    """
    start = time.perf_counter()
    for _ in range(max(1, int(iterations))):
        for text in EXPRESSIONS:
            parse_func(text)
    total_ms = (time.perf_counter() - start) * 1000
    count = max(1, int(iterations)) * len(EXPRESSIONS)

    print(f"\n{name}")
    print(f"  總時間: {total_ms:.2f} ms")
    print(f"  運算式數: {count}")
    print(f"  平均每式: {total_ms / count:.4f} ms")
    return total_ms / count


def benchmark_scenarios(grid: int, threads: list[int]) -> None:
    from poissonlab import ScenarioEngine

    for k in threads:
        timings: dict[str, float] = {}
        engine = ScenarioEngine(on_timing=lambda op, elapsed: timings.__setitem__(op, elapsed))
        print(f"\n--- threads={k}, grid={grid} ---")
        for name in engine.list_scenarios():
            report = engine.run(name, overrides={"grid": grid, "threads": k})
            elapsed = timings.get(f"ScenarioEngine.run({report.scenario})", float("nan"))
            counts = ", ".join(f"{s} {c}" for s, c in report.status_counts().items())
            print(f"  {name:<24} {elapsed * 1000:9.1f} ms  ({counts})")


def main() -> None:
    parser = argparse.ArgumentParser(description="poissonlab 效能基準")
    parser.add_argument("--grid", type=int, default=11)
    parser.add_argument("--threads", default="1,4", help="逗號分隔的 worker 數")
    args = parser.parse_args()

    from poissonlab.backend import get_expression_backend

    print("=" * 60)
    print("poissonlab 效能基準測試")
    print("=" * 60)

    backend = get_expression_backend()

    def parse(text: str) -> object:
        return backend.parse(text, COORDS)

    backend.clear_cache()
    benchmark_parse(parse, "解析（冷快取）", iterations=1)
    benchmark_parse(parse, "解析（快取命中）", iterations=100)

    parse_stats = backend.get_cache_stats()["caches"]["parse"]
    print("\n  backend 快取統計:")
    print(f"    hits={parse_stats['hits']}, misses={parse_stats['misses']}, currsize={parse_stats['currsize']}")

    benchmark_scenarios(args.grid, [int(k) for k in args.threads.split(",") if k.strip()])

    print("\n" + "=" * 60)
    print("測試完成")
    print("=" * 60)


if __name__ == "__main__":
    main()

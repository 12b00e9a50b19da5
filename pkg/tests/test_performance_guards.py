"""
效能/退化守門測試（非時間基準）

原則：
- 不用 wall-clock 閾值，避免 CI/環境波動造成 flaky
- 以「關鍵呼叫次數上限」與「快取命中」做回歸保護
"""

from __future__ import annotations

XYZ = ("x", "y", "z")


def _plane():
    from poissonlab.exprcore import parse
    from poissonlab.poisson import Chart, PoissonStructure

    chart = Chart(XYZ, (-1.0,) * 3, (1.0,) * 3)
    return PoissonStructure.from_entries(chart, [("x", "y", parse("x^2 + y^2", XYZ))])


def test_leaf_dim_map_computes_each_rank_once(monkeypatch):
    from poissonlab.flows import leaf_dim_map
    from poissonlab.poisson import PoissonStructure

    structure = _plane()
    calls = []
    original = PoissonStructure.rank_at

    def counting(self, p, *args, **kwargs):
        calls.append(tuple(p))
        return original(self, p, *args, **kwargs)

    monkeypatch.setattr(PoissonStructure, "rank_at", counting)
    leaf_dim_map(structure, structure.chart.grid(6, axes=("x", "y"), fixed={"z": 0.0}))
    assert len(calls) == 36


def test_same_leaf_probe_respects_its_budget():
    from poissonlab.clean import LeafAtlas, LeafRegion
    from poissonlab.exprcore import parse
    from poissonlab.flows import same_leaf_probe

    structure = _plane()
    atlas = LeafAtlas(structure, [LeafRegion("plane", (parse("z", XYZ),), rank=2)])
    for budget in (5, 20, 80):
        probe = same_leaf_probe(structure, atlas, (0.3, 0.1, 0.2), (-0.4, 0.5, 0.2), budget=budget)
        assert probe.evaluations <= budget


def test_reloading_a_scenario_does_not_reparse(tmp_path):
    from poissonlab.backend import get_expression_backend
    from poissonlab.scenarios.loader import builtin, dumps, load

    path = tmp_path / "cubic.scn"
    path.write_text(dumps(builtin("cubic-graph")), encoding="utf-8")
    backend = get_expression_backend()

    load(path)
    misses_before = backend.get_cache_stats()["caches"]["parse"]["misses"]
    load(path)
    assert backend.get_cache_stats()["caches"]["parse"]["misses"] == misses_before


def test_adaptive_integration_step_count_is_bounded():
    from poissonlab.exprcore import parse
    from poissonlab.flows import FlowSpec, integrate

    structure = _plane()
    H = parse("x^2 + y^2", XYZ)
    spec = FlowSpec(H, (0.0, 1.0), step=0.05, method="adaptive")
    assert len(integrate(structure, spec, (0.5, 0.0, 0.0))) < 2000

"""
Engine 層測試模組

測試分層架構：Backend → ScenarioEngine → ScenarioRunner
"""

from __future__ import annotations

import pytest

SMALL = """
[scenario]
name = small
seed = 5

[chart]
coord = x -1 1
coord = y -1 1
coord = z -1 1

[poisson]
entry = x y "z"

[check jacobi]
op = jacobi
count = 10
"""


def _small():
    from poissonlab.scenarios.loader import loads

    return loads(SMALL)


class TestScenarioEngine:
    """Scenario 引擎測試"""

    def test_engine_initialization(self):
        """測試引擎初始化"""
        from poissonlab import ScenarioEngine

        engine = ScenarioEngine()
        assert engine.is_initialized()
        assert engine.backend is not None
        assert engine.backend.is_initialized()
        assert engine.fail_policy == "record"

    def test_backend_is_shared(self):
        """兩個引擎共用同一個 backend 單例"""
        from poissonlab import ScenarioEngine

        assert ScenarioEngine().backend is ScenarioEngine().backend

    def test_cache_sharing(self, tmp_path):
        """同一個檔案載入兩次，第二次的解析應命中快取"""
        from poissonlab import ScenarioEngine

        path = tmp_path / "small.scn"
        path.write_text(SMALL, encoding="utf-8")
        engine = ScenarioEngine()

        engine.load(path)
        stats_after_first = engine.get_backend_stats()

        engine.load(path)
        stats_after_second = engine.get_backend_stats()

        assert stats_after_second["initialized"]
        assert stats_after_second["caches"]["parse"]["hits"] > stats_after_first["caches"]["parse"]["hits"]

    def test_list_scenarios(self):
        from poissonlab import ScenarioEngine

        names = ScenarioEngine().list_scenarios()
        assert len(names) == 8
        assert names == sorted(names)

    def test_run_accepts_scenario_objects_and_names(self):
        """Scenario 物件直接執行；名稱走內建查詢"""
        from poissonlab import ScenarioEngine
        from poissonlab.core.errors import UnknownScenarioError

        engine = ScenarioEngine()
        report = engine.run(_small())
        assert report.scenario == "small"
        assert report.exit_code == 0
        with pytest.raises(UnknownScenarioError):
            engine.run("no-such-scenario")

    def test_run_accepts_paths(self, tmp_path):
        from poissonlab import ScenarioEngine

        path = tmp_path / "small.scn"
        path.write_text(SMALL, encoding="utf-8")
        assert ScenarioEngine().run(path).scenario == "small"

    def test_seed_argument_overrides_the_declared_seed(self):
        from poissonlab import ScenarioEngine

        engine = ScenarioEngine()
        assert engine.run(_small()).seed == 5
        assert engine.run(_small(), seed=11).seed == 11

    def test_on_timing_callback(self):
        """計時回呼會收到各操作名稱"""
        from poissonlab import ScenarioEngine

        timings = []
        engine = ScenarioEngine(on_timing=lambda name, elapsed: timings.append((name, elapsed)))
        engine.run(_small())
        names = [name for name, _ in timings]
        assert "ScenarioEngine.__init__" in names
        assert "ScenarioEngine.run(small)" in names
        assert all(elapsed >= 0 for _, elapsed in timings)

    def test_fail_policy_override_per_run(self):
        from poissonlab import ScenarioEngine
        from poissonlab.scenarios.loader import loads

        broken = loads(SMALL + "\n[check mystery]\nop = no_such_op\n")
        engine = ScenarioEngine()
        assert engine.run(broken).exit_code == 2
        with pytest.raises(KeyError):
            engine.run(broken, fail_policy="raise")
        with pytest.raises(KeyError):
            ScenarioEngine(fail_policy="raise").run(broken)

    def test_emit_writes_files(self, tmp_path):
        from poissonlab import ScenarioEngine

        engine = ScenarioEngine()
        paths = engine.emit(engine.run(_small()), tmp_path, formats=("json",))
        assert [p.name for p in paths] == ["small.json"]

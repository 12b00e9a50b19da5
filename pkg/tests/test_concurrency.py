"""
併發安全性測試（Thread Safety）

範圍：
- Backend 單例取得/初始化在多執行緒下不應產生多個實例或拋例外
- 共享的 ScalarField 在多執行緒下可同時求值（結果一致）
- 同一個 ScenarioEngine 可同時執行多個 scenario
"""

from concurrent.futures import ThreadPoolExecutor

XYZ = ("x", "y", "z")


def test_backend_singleton_is_threadsafe():
    from poissonlab.backend import get_expression_backend

    with ThreadPoolExecutor(max_workers=16) as ex:
        ids = set(ex.map(lambda _: id(get_expression_backend()), range(100)))

    assert len(ids) == 1


def test_backend_initialize_is_threadsafe():
    from poissonlab.backend import get_expression_backend

    backend = get_expression_backend()
    with ThreadPoolExecutor(max_workers=16) as ex:
        list(ex.map(lambda _: backend.initialize(), range(20)))

    assert backend.is_initialized()


def test_parse_returns_one_shared_field_across_threads():
    from poissonlab.exprcore import parse

    with ThreadPoolExecutor(max_workers=8) as ex:
        fields = list(ex.map(lambda _: parse("sin(x)*y + z^3", XYZ), range(50)))

    assert len({id(f) for f in fields}) == 1


def test_shared_field_evaluation_is_threadsafe():
    from poissonlab.exprcore import parse

    field = parse("exp(x)*y - z^2", XYZ)
    points = [(0.01 * i, -0.02 * i, 0.03 * i) for i in range(64)]
    expected = [field.eval(p) for p in points]

    with ThreadPoolExecutor(max_workers=8) as ex:
        results = list(ex.map(field.eval, points))

    assert results == expected


def test_engine_runs_concurrently():
    from poissonlab import ScenarioEngine
    from poissonlab.scenarios.emit import report_to_json

    engine = ScenarioEngine()
    scenario = engine.load("cubic-graph")
    overrides = {"grid": 5}

    def _run(_):
        return report_to_json(engine.run(scenario, overrides=overrides), include_runtime=False)

    with ThreadPoolExecutor(max_workers=4) as ex:
        outputs = list(ex.map(_run, range(4)))

    assert len(set(outputs)) == 1

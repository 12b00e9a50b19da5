"""
Scenario runner

執行一個 scenario 的所有（或選定的）check，組出 Report。

- 每個 check 有自己的 rng：default_rng([seed, check 索引])，結果與 worker 數無關
- check 出錯（基礎設施錯誤）記錄為 status="error" 並繼續；fail_policy="raise" 時直接拋出
- 事件（CheckEvent）經由 on_event 回呼送出；回呼本身的例外只記 log，不中止執行
"""

from __future__ import annotations

import logging
import time
import uuid
from typing import Any, Literal, Mapping

import numpy as np

from poissonlab.core.events import CheckEvent, CheckEventHandler
from poissonlab.core.run_config import LabDefaults, RunOverrides, normalize_overrides, resolve_thread_count
from poissonlab.utils.logger import TimingContext, check_logger, get_logger
from poissonlab.utils.parallel import parallel_map

from .checks import CheckInvocation, CheckOutcome, default_tolerance, run_op
from .context import ScenarioContext
from .model import Artifact, CheckRecord, CheckSpec, CheckStatus, Report, Scenario

FailPolicy = Literal["record", "raise"]


def _status(outcome: CheckOutcome, spec: CheckSpec) -> CheckStatus:
    if outcome.passed is None:
        return "undetermined"
    passed = outcome.passed if spec.expect == "pass" else not outcome.passed
    return "pass" if passed else "fail"


class ScenarioRunner:
    """
    使用方式:
        runner = ScenarioRunner(on_event=print)
        report = runner.run(builtin("cubic-graph"), seed=0, overrides={"grid": 41})
    """

    def __init__(
        self,
        on_event: CheckEventHandler | None = None,
        fail_policy: FailPolicy = "record",
        logger: logging.Logger | None = None,
    ):
        if fail_policy not in ("record", "raise"):
            raise ValueError(f"未知的 fail_policy {fail_policy!r}")
        self._on_event = on_event
        self._fail_policy = fail_policy
        self._logger = logger or get_logger("scenarios.runner")

    def _emit(self, event: CheckEvent) -> None:
        try:
            if self._on_event is not None:
                self._on_event(event)
        except Exception:
            self._logger.exception("on_event 回呼執行失敗")

    def run(
        self,
        scenario: Scenario,
        seed: int | None = None,
        overrides: Mapping[str, Any] | None = None,
        trace_id: str | None = None,
    ) -> Report:
        """
        Raises:
            ValueError: overrides 不合法或選了不存在的 check
            PoissonLabError: scenario 本身無法建構（例如 atlas 驗證失敗）
        """
        options: RunOverrides = normalize_overrides(overrides)
        seed_value = options.get("seed", seed if seed is not None else scenario.seed)
        threads = resolve_thread_count(options)
        trace = trace_id or uuid.uuid4().hex

        selected = list(enumerate(scenario.checks))
        if "checks" in options:
            known = {spec.name for spec in scenario.checks}
            missing = [name for name in options["checks"] if name not in known]
            if missing:
                raise ValueError(f"scenario {scenario.name!r} 沒有 check：{missing}")
            selected = [(k, spec) for k, spec in selected if spec.name in options["checks"]]

        with TimingContext(f"scenario {scenario.name}", self._logger, logging.DEBUG):
            ctx = ScenarioContext(scenario, tol_rank=options.get("tol_rank", LabDefaults.TOL_RANK))
            # 多個 check 並行時，每個 check 內部只用單一 worker
            inner_threads = 1 if threads > 1 and len(selected) > 1 else threads

            def execute(item: tuple[int, CheckSpec]) -> tuple[CheckRecord, list[Artifact], list[str]]:
                index, spec = item
                return self._run_check(ctx, spec, index, seed_value, options, inner_threads, trace)

            results = parallel_map(execute, selected, threads if len(selected) > 1 else 1)

        records = tuple(r[0] for r in results)
        artifacts = tuple(a for r in results for a in r[1])
        warnings = tuple(w for r in results for w in r[2])
        report = Report(scenario.name, int(seed_value), records, artifacts, warnings, scenario.plot)
        self._logger.info(f"scenario {scenario.name!r} 完成：{report.status_counts()}")
        return report

    def _run_check(
        self,
        ctx: ScenarioContext,
        spec: CheckSpec,
        index: int,
        seed: int,
        options: RunOverrides,
        threads: int,
        trace_id: str,
    ) -> tuple[CheckRecord, list[Artifact], list[str]]:
        scenario = ctx.scenario.name
        log = check_logger(self._logger, scenario, spec.name, trace_id)
        tolerance = options.get("tol", spec.tolerance if spec.tolerance is not None else default_tolerance(spec.op))
        invocation = CheckInvocation(
            ctx=ctx,
            spec=spec,
            tolerance=tolerance,
            rng=np.random.default_rng([seed, index]),
            threads=threads,
            grid=options.get("grid"),
        )
        self._emit({"type": "check_started", "scenario": scenario, "check": spec.name, "trace_id": trace_id})
        started = time.perf_counter()
        try:
            outcome = run_op(invocation)
        except Exception as exc:
            runtime_ms = (time.perf_counter() - started) * 1000.0
            self._emit({
                "type": "check_error",
                "scenario": scenario,
                "check": spec.name,
                "trace_id": trace_id,
                "status": "error",
                "runtime_ms": runtime_ms,
                "exception_type": type(exc).__name__,
                "exception_message": str(exc),
            })
            if self._fail_policy == "raise":
                raise
            log.exception("執行失敗，記錄為 error")
            record = CheckRecord(spec.name, spec.op, "error", None, tolerance, runtime_ms,
                                 f"{type(exc).__name__}: {exc}")
            return record, [], self._warn(log, scenario, spec, invocation.warnings, trace_id)

        runtime_ms = (time.perf_counter() - started) * 1000.0
        status = _status(outcome, spec)
        record = CheckRecord(spec.name, spec.op, status, outcome.metric, tolerance, runtime_ms, outcome.message)
        self._emit({
            "type": "check_finished",
            "scenario": scenario,
            "check": spec.name,
            "trace_id": trace_id,
            "status": status,
            "metric": outcome.metric,
            "tolerance": tolerance,
            "runtime_ms": runtime_ms,
        })
        log.debug(f"{status}（metric={outcome.metric}）{outcome.message}")
        return record, list(outcome.artifacts), self._warn(log, scenario, spec, invocation.warnings, trace_id)

    def _warn(
        self, log: logging.LoggerAdapter, scenario: str, spec: CheckSpec, warnings: list[str], trace_id: str
    ) -> list[str]:
        for message in warnings:
            log.warning(message)
            self._emit({
                "type": "warning", "scenario": scenario, "check": spec.name,
                "trace_id": trace_id, "message": message,
            })
        return [f"{spec.name}: {m}" for m in warnings]


def run_scenario(
    scenario: Scenario,
    seed: int | None = None,
    overrides: Mapping[str, Any] | None = None,
    on_event: CheckEventHandler | None = None,
    fail_policy: FailPolicy = "record",
) -> Report:
    """ScenarioRunner 的便利包裝。"""
    return ScenarioRunner(on_event, fail_policy).run(scenario, seed, overrides)

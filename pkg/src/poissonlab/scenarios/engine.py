"""
Scenario 引擎 (ScenarioEngine)

負責持有共享的運算式 backend，載入 scenario（內建名稱或檔案），
執行 checks 並輸出報告。
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from poissonlab.backend import ExpressionBackend, get_expression_backend
from poissonlab.core.engine_interface import LabEngine
from poissonlab.core.events import CheckEventHandler

from .emit import FORMATS, emit
from .loader import list_builtins, resolve
from .model import Report, Scenario
from .runner import FailPolicy, ScenarioRunner


class ScenarioEngine(LabEngine):
    """
    Scenario 引擎。

    職責：
    - 持有運算式 backend（解析 + 編譯快取）
    - 解析內建名稱或 .scn 路徑
    - 以 ScenarioRunner 執行 checks，並把事件轉給 on_event

    使用方式:
        engine = ScenarioEngine()
        report = engine.run("cubic-graph", seed=0, overrides={"grid": 41})
        engine.emit(report, "out", formats=("json", "svg"))
    """

    _engine_name = "scenario"

    def __init__(
        self,
        *,
        fail_policy: FailPolicy = "record",
        verbose: bool = False,
        on_timing: Optional[Callable[[str, float], None]] = None,
    ):
        """
        Args:
            fail_policy: check 出現基礎設施錯誤時 record（記錄並繼續）或 raise
            verbose: 是否輸出較多日誌
            on_timing: 可選的計時回呼（利於效能觀測）
        """
        self._init_logger(verbose=verbose, on_timing=on_timing)

        with self._log_timing("ScenarioEngine.__init__"):
            self._backend: ExpressionBackend = get_expression_backend()
            self._backend.initialize()
            self._fail_policy: FailPolicy = fail_policy
            self._initialized = True
            self._logger.info("ScenarioEngine initialized")

    @property
    def backend(self) -> ExpressionBackend:
        return self._backend

    @property
    def fail_policy(self) -> FailPolicy:
        return self._fail_policy

    def is_initialized(self) -> bool:
        return self._initialized

    def get_backend_stats(self) -> Dict[str, Any]:
        return dict(self._backend.get_cache_stats())

    def list_scenarios(self) -> List[str]:
        return list_builtins()

    def load(self, scenario: str | Path | Scenario) -> Scenario:
        """
        Raises:
            UnknownScenarioError: 內建名稱不存在
            ScenarioParseError: 檔案格式錯誤
        """
        if isinstance(scenario, Scenario):
            return scenario
        with self._log_timing("ScenarioEngine.load"):
            return resolve(scenario)

    def run(
        self,
        scenario: str | Path | Scenario,
        seed: Optional[int] = None,
        overrides: Any = None,
        *,
        on_event: Optional[CheckEventHandler] = None,
        fail_policy: Optional[FailPolicy] = None,
        **kwargs: Any,
    ) -> Report:
        """
        執行 scenario 的所有（或 overrides["checks"] 選定的）checks。

        Args:
            scenario: Scenario、內建名稱或 .scn 路徑
            seed: 亂數種子（None 時使用 scenario 宣告的 seed）
            overrides: grid / tol_rank / tol / seed / checks / threads
            on_event: 可選的 CheckEvent 回呼
            fail_policy: 覆蓋引擎的 fail_policy
        """
        loaded = self.load(scenario)
        runner = ScenarioRunner(
            on_event=on_event,
            fail_policy=fail_policy or self._fail_policy,
            logger=self._logger,
        )
        with self._log_timing(f"ScenarioEngine.run({loaded.name})"):
            return runner.run(loaded, seed, overrides)

    def emit(
        self,
        report: Report,
        out_dir: str | Path,
        formats: Sequence[str] = FORMATS,
        include_runtime: bool = True,
    ) -> List[Path]:
        with self._log_timing("ScenarioEngine.emit"):
            return emit(report, out_dir, formats, include_runtime)

"""
實驗引擎抽象基類

ScenarioEngine 的共同骨架：logger、on_timing 計時回呼，以及對外的最小介面
（run / list_scenarios / is_initialized / get_backend_stats）。
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Any, Dict, List, Optional

from poissonlab.utils.logger import TimingCallback, TimingContext, get_logger, setup_logger

if TYPE_CHECKING:
    from poissonlab.scenarios.model import Report, Scenario


class LabEngine(ABC):
    """
    實驗引擎抽象基類

    一個 process 建立一個引擎即可：scenario 與 report 都是不可變資料，
    同一個引擎可以（跨執行緒）重複執行多個 scenario。
    子類別在 __init__ 開頭呼叫 _init_logger。
    """

    _engine_name: str = "base"

    def _init_logger(self, verbose: bool = False, on_timing: Optional[TimingCallback] = None) -> None:
        """
        Args:
            verbose: True 時把根 logger 設為 DEBUG
            on_timing: (operation, elapsed 秒) 回呼，_log_timing 區塊結束時呼叫
        """
        self._verbose = verbose
        self._timing_callback = on_timing
        if verbose:
            setup_logger(level=logging.DEBUG)
        self._logger = get_logger(f"engine.{self._engine_name}")

    def _log_timing(self, operation: str) -> TimingContext:
        return TimingContext(operation, self._logger, logging.DEBUG, self._timing_callback)

    @abstractmethod
    def run(self, scenario: "Scenario", seed: Optional[int] = None, overrides: Any = None, **kwargs) -> "Report":
        """執行 scenario；相同 scenario + seed 產生相同的 Report。"""

    @abstractmethod
    def list_scenarios(self) -> List[str]:
        """可用名稱執行的內建 scenario。"""

    @abstractmethod
    def is_initialized(self) -> bool:
        ...

    @abstractmethod
    def get_backend_stats(self) -> Dict[str, Any]:
        """backend 快取統計（BackendStats 格式）。"""

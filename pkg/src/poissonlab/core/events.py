"""
事件模型（Event Model）

scenario runner 預設不直接輸出到 stdout。
若需要即時得知「哪個 check 開始/結束/出錯」，請使用事件回呼（event handler）。

設計原則：
- 一般執行允許單一 check 出錯後繼續（記錄為 error），但不允許「默默」略過。
- CI 模式（fail_policy="raise"）遇到基礎設施錯誤應直接中止。
"""

from __future__ import annotations

from typing import Callable, Literal, TypedDict


class CheckEvent(TypedDict, total=False):
    """
    check 事件資料結構（TypedDict, total=False）。

    用途：
    - ScenarioEngine.run(on_event=...) 的 callback 會收到此事件
    - 欄位依 event.type 選填：check_finished 有 status/metric；check_error 有 exception_*
    """
    type: Literal["check_started", "check_finished", "check_error", "warning"]
    scenario: str
    check: str
    trace_id: str

    # check_finished
    status: Literal["pass", "fail", "undetermined", "error"]
    metric: float | None
    tolerance: float | None
    runtime_ms: float

    # check_error / warning
    exception_type: str
    exception_message: str
    message: str


CheckEventHandler = Callable[[CheckEvent], None]

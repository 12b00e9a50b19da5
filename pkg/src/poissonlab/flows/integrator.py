"""
Hamiltonian flow 積分器

- 固定步長 RK4（預設 step 1e-3）
- 步長倍增自適應（local tolerance 1e-9，Richardson 外插）

RK4 的中間 stage 不檢查定義域，只有被接受的點才檢查；
離開 box 時拋 LeftDomainError 並附上離開前的部分軌跡。
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

import numpy as np

from poissonlab.core.errors import LeftDomainError
from poissonlab.core.protocols import DifferentiableScalar
from poissonlab.core.run_config import LabDefaults
from poissonlab.poisson.structure import PoissonStructure
from poissonlab.utils.logger import get_logger

_logger = get_logger("flows.integrator")

FlowMethod = Literal["rk4", "adaptive"]

# 自適應積分的步長調整界限
_GROW_LIMIT = 2.0
_SHRINK_LIMIT = 0.1
_SAFETY = 0.9


@dataclass(frozen=True)
class FlowSpec:
    """
    flow 規格

    - hamiltonian: H（time_param 不為 None 時，以該參數傳入目前時間 t）
    - t_span: (t0, t1)，t1 ≥ t0
    - backward: True 時從 t1 積分回 t0（φ^{-1}）
    """

    hamiltonian: DifferentiableScalar
    t_span: tuple[float, float]
    step: float = LabDefaults.FLOW_STEP
    method: FlowMethod = "rk4"
    time_param: str | None = None
    params: Mapping[str, float] = field(default_factory=dict)
    backward: bool = False
    tolerance: float = LabDefaults.ADAPTIVE_TOL

    def __post_init__(self) -> None:
        t0, t1 = self.t_span
        if not t1 >= t0:
            raise ValueError(f"t_span 必須滿足 t1 ≥ t0，收到 {self.t_span}")
        if not self.step > 0:
            raise ValueError(f"step 必須為正數，收到 {self.step}")
        if self.method not in ("rk4", "adaptive"):
            raise ValueError(f"未知的積分方法 {self.method!r}")

    @classmethod
    def for_time(cls, hamiltonian: DifferentiableScalar, t: float, **kwargs) -> "FlowSpec":
        """時間 t 的 flow（t < 0 時反向積分 |t|）。"""
        return cls(hamiltonian, (0.0, abs(float(t))), backward=t < 0, **kwargs)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    軌跡

    - times: 單調的時間序列（backward 時遞減）
    - points: (N, dim)
    - drift: 重新投影時累積的最大修正量（一般積分為 0）
    """

    times: np.ndarray
    points: np.ndarray
    drift: float = 0.0

    @property
    def final(self) -> np.ndarray:
        return self.points[-1]

    def __len__(self) -> int:
        return int(self.points.shape[0])


# =============================================================================
# 向量場與單步
# =============================================================================

def vector_field(
    structure: PoissonStructure,
    hamiltonian: DifferentiableScalar,
    q: np.ndarray,
    params: Mapping[str, float] | None = None,
) -> np.ndarray:
    """X_H(q)，不檢查定義域（RK4 stage 用）。"""
    return structure.raw_matrix(q).T @ hamiltonian.grad(q, params)


def _params_at(spec: FlowSpec, t: float) -> Mapping[str, float]:
    if spec.time_param is None:
        return spec.params
    return {**spec.params, spec.time_param: t}


def rk4_step(
    structure: PoissonStructure, spec: FlowSpec, t: float, p: np.ndarray, dt: float
) -> np.ndarray:
    """單一 RK4 步（dt 可為負）。"""
    h = spec.hamiltonian
    k1 = vector_field(structure, h, p, _params_at(spec, t))
    k2 = vector_field(structure, h, p + 0.5 * dt * k1, _params_at(spec, t + 0.5 * dt))
    k3 = vector_field(structure, h, p + 0.5 * dt * k2, _params_at(spec, t + 0.5 * dt))
    k4 = vector_field(structure, h, p + dt * k3, _params_at(spec, t + dt))
    return p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# =============================================================================
# 積分
# =============================================================================

def integrate(structure: PoissonStructure, spec: FlowSpec, p0: Sequence[float]) -> Trajectory:
    """
    沿 X_H 積分

    Raises:
        OutOfDomainError: p0 不在 chart 內
        LeftDomainError: 軌跡離開 box（error.partial 為部分軌跡）
        NonDifferentiableError: H 在軌跡上不可微
    """
    point = structure.chart.require(p0)
    t0, t1 = spec.t_span
    start, end = (t1, t0) if spec.backward else (t0, t1)
    if spec.method == "adaptive":
        return _integrate_adaptive(structure, spec, point, start, end)
    return _integrate_rk4(structure, spec, point, start, end)


def _accept(
    structure: PoissonStructure,
    times: list[float],
    points: list[np.ndarray],
    t: float,
    p: np.ndarray,
) -> None:
    if not np.all(np.isfinite(p)) or not structure.chart.contains(p):
        partial = Trajectory(np.array(times), np.array(points))
        raise LeftDomainError(p, partial)
    times.append(t)
    points.append(p)


def _integrate_rk4(
    structure: PoissonStructure, spec: FlowSpec, p: np.ndarray, start: float, end: float
) -> Trajectory:
    span = abs(end - start)
    times, points = [start], [p]
    if span == 0.0:
        return Trajectory(np.array(times), np.array(points))
    n_steps = max(1, math.ceil(span / spec.step - 1e-9))
    dt = (end - start) / n_steps
    for k in range(n_steps):
        t = start + k * dt
        p = rk4_step(structure, spec, t, p, dt)
        _accept(structure, times, points, start + (k + 1) * dt, p)
    return Trajectory(np.array(times), np.array(points))


def _integrate_adaptive(
    structure: PoissonStructure, spec: FlowSpec, p: np.ndarray, start: float, end: float
) -> Trajectory:
    direction = 1.0 if end >= start else -1.0
    span = abs(end - start)
    times, points = [start], [p]
    t = start
    h = min(spec.step, span)
    min_step = 1e-14 * max(1.0, span)
    rejected = 0
    while direction * (end - t) > min_step:
        h = min(h, abs(end - t))
        dt = direction * h
        coarse = rk4_step(structure, spec, t, p, dt)
        half = rk4_step(structure, spec, t, p, 0.5 * dt)
        fine = rk4_step(structure, spec, t + 0.5 * dt, half, 0.5 * dt)
        error = float(np.max(np.abs(fine - coarse))) / 15.0
        if error <= spec.tolerance or h <= min_step:
            t = t + dt
            p = fine + (fine - coarse) / 15.0
            _accept(structure, times, points, t, p)
            factor = _GROW_LIMIT if error == 0.0 else _SAFETY * (spec.tolerance / error) ** 0.2
            h *= min(_GROW_LIMIT, factor)
        else:
            rejected += 1
            h *= max(_SHRINK_LIMIT, _SAFETY * (spec.tolerance / error) ** 0.2)
    if rejected:
        _logger.debug(f"自適應積分：{len(times) - 1} 步接受，{rejected} 步拒絕")
    return Trajectory(np.array(times), np.array(points))


def compose_flows(
    structure: PoissonStructure, specs: Sequence[FlowSpec], p0: Sequence[float]
) -> np.ndarray:
    """依序套用 flows，回傳終點（空序列回傳 p0）。"""
    point = structure.chart.require(p0)
    for spec in specs:
        point = integrate(structure, spec, point).final
    return point

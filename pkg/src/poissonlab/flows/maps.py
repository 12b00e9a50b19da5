"""
時間 t 的 flow 作為映射

FlowMap 滿足 DifferentiableMap 協議：evaluate 走積分器，
jacobian 用中央差分（step 1e-5，flow 一般沒有封閉形式導數）。
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from poissonlab.core.protocols import DifferentiableScalar
from poissonlab.core.run_config import LabDefaults
from poissonlab.poisson.structure import PoissonStructure

from .integrator import FlowMethod, FlowSpec, integrate


def flow_map(
    structure: PoissonStructure,
    hamiltonian: DifferentiableScalar,
    t: float,
    p: Sequence[float],
    step: float = LabDefaults.FLOW_STEP,
    method: FlowMethod = "rk4",
    params: Mapping[str, float] | None = None,
) -> np.ndarray:
    """φ^t_H(p)；t < 0 時反向積分。"""
    spec = FlowSpec.for_time(hamiltonian, t, step=step, method=method, params=dict(params or {}))
    return integrate(structure, spec, p).final


class FlowMap:
    """
    φ^t_H 作為可微映射

    使用方式:
        phi = FlowMap(structure, H, t=1.0)
        phi.evaluate(p)
        phi.jacobian(p)    # 3 × 3
    """

    def __init__(
        self,
        structure: PoissonStructure,
        hamiltonian: DifferentiableScalar,
        t: float,
        step: float = LabDefaults.FLOW_STEP,
        fd_step: float = LabDefaults.FD_STEP,
        params: Mapping[str, float] | None = None,
    ):
        self._structure = structure
        self._spec = FlowSpec.for_time(hamiltonian, t, step=step, params=dict(params or {}))
        self._fd_step = fd_step

    @property
    def t(self) -> float:
        t1 = self._spec.t_span[1]
        return -t1 if self._spec.backward else t1

    def evaluate(self, p: Sequence[float]) -> np.ndarray:
        return integrate(self._structure, self._spec, p).final

    def jacobian(self, p: Sequence[float]) -> np.ndarray:
        point = np.asarray(p, dtype=float)
        n = point.size
        columns = []
        for k in range(n):
            offset = np.zeros(n)
            offset[k] = self._fd_step
            forward = self.evaluate(point + offset)
            backward = self.evaluate(point - offset)
            columns.append((forward - backward) / (2.0 * self._fd_step))
        return np.column_stack(columns)

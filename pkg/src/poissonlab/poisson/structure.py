"""
PoissonStructure：chart 上的反對稱 bivector 場

只儲存上三角 Π^{ij}（i < j）；下三角由反對稱性給出，對角線為 0。

符號約定（整個套件一致）：
- sharp(α)^j = Σ_i α_i Π^{ij}，即 Mᵀα
- {f, g} = Σ_{i,j} ∂_i f · Π^{ij} · ∂_j g
- X_H = sharp(dH)；Π^{xy} = 1 時 X_H = (−H_y, H_x)
- ω_L(sharp α, sharp β) = −Π(α, β)；Π = ∂x∧∂y 時 ω_L = dy∧dx
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from poissonlab.core.errors import NotInLeafError, OddRankError
from poissonlab.core.protocols import DifferentiableScalar
from poissonlab.core.run_config import LabDefaults
from poissonlab.exprcore.field import ScalarField
from poissonlab.utils.linalg import column_basis, rank_threshold, singular_values

from .chart import Chart


def antisymmetric_pairing(matrix: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """
    aᵀ·M·b，M 反對稱：Σ_{i<j} M_ij (a_i b_j − a_j b_i)

    交換 a、b 的結果恰好反號，a = b 時恰好為 0。
    """
    rows, cols = np.triu_indices(matrix.shape[0], 1)
    return float(np.sum(matrix[rows, cols] * (a[rows] * b[cols] - a[cols] * b[rows])))


class PoissonStructure:
    """
    Poisson 結構

    使用方式:
        chart = Chart(("x", "y"), (-1, -1), (1, 1))
        plane = PoissonStructure.from_entries(chart, [("x", "y", parse("1", ["x", "y"]))])
        plane.matrix_at((0, 0))           # [[0, 1], [-1, 0]]
        plane.bracket(fx, fy, (0, 0))      # 1.0
    """

    def __init__(self, chart: Chart, upper: Mapping[tuple[int, int], DifferentiableScalar]):
        for (i, j), field in upper.items():
            if not 0 <= i < j < chart.dim:
                raise ValueError(f"上三角索引 ({i}, {j}) 不合法（dim = {chart.dim}）")
            if tuple(field.coords) != chart.coord_names:
                raise ValueError(f"Π^{{{i}{j}}} 的座標 {field.coords} 與 chart 不一致")
        self._chart = chart
        self._upper = dict(sorted(upper.items()))

    @classmethod
    def from_entries(
        cls, chart: Chart, entries: Iterable[tuple[str, str, DifferentiableScalar]]
    ) -> "PoissonStructure":
        """
        由 (座標 a, 座標 b, Π^{ab}) 建構；a 在 b 之後時儲存 −Π^{ab} 到 (b, a)。
        """
        upper: dict[tuple[int, int], DifferentiableScalar] = {}
        for a, b, field in entries:
            i, j = chart.index(a), chart.index(b)
            if i == j:
                raise ValueError(f"對角線項 Π^{{{a}{a}}} 必須為 0")
            if i > j:
                if not isinstance(field, ScalarField):
                    raise ValueError(f"Π^{{{a}{b}}} 需要反號，只支援 ScalarField")
                i, j, field = j, i, -field
            if (i, j) in upper:
                raise ValueError(f"重複的項 Π^{{{a}{b}}}")
            upper[(i, j)] = field
        return cls(chart, upper)

    @property
    def chart(self) -> Chart:
        return self._chart

    @property
    def dim(self) -> int:
        return self._chart.dim

    @property
    def upper(self) -> dict[tuple[int, int], DifferentiableScalar]:
        return dict(self._upper)

    def __repr__(self) -> str:
        names = self._chart.coord_names
        terms = ", ".join(
            f"{names[i]}{names[j]}: {getattr(f, 'text', f)!s}" for (i, j), f in self._upper.items()
        )
        return f"PoissonStructure({{{terms}}})"

    # -------------------------------------------------------------------------
    # 矩陣與基本運算
    # -------------------------------------------------------------------------

    def raw_matrix(self, p: Sequence[float]) -> np.ndarray:
        """不檢查定義域的 Π(p)（差分 stencil 可能略出 box）。"""
        matrix = np.zeros((self.dim, self.dim))
        for (i, j), field in self._upper.items():
            value = field.eval(p)
            matrix[i, j] = value
            matrix[j, i] = -value
        return matrix

    def matrix_at(self, p: Sequence[float]) -> np.ndarray:
        """
        反對稱矩陣 Π(p)

        Raises:
            OutOfDomainError: p 不在 chart 內
            DomainError: 係數求值失敗
        """
        return self.raw_matrix(self._chart.require(p))

    def sharp(self, p: Sequence[float], alpha: Sequence[float]) -> np.ndarray:
        """Π^♯(α)：第 j 分量為 Σ_i α_i Π^{ij}(p)。"""
        alpha = np.asarray(alpha, dtype=float)
        if alpha.shape != (self.dim,):
            raise ValueError(f"covector 長度 {alpha.shape} 與 chart 維度 {self.dim} 不符")
        return self.matrix_at(p).T @ alpha

    def bracket(
        self,
        f: DifferentiableScalar,
        g: DifferentiableScalar,
        p: Sequence[float],
        params: Mapping[str, float] | None = None,
    ) -> float:
        """{f, g}(p) = ∇f · Π(p) · ∇g"""
        matrix = self.matrix_at(p)
        return antisymmetric_pairing(matrix, f.grad(p, params), g.grad(p, params))

    def hamiltonian_vf(
        self, hamiltonian: DifferentiableScalar, p: Sequence[float], params: Mapping[str, float] | None = None
    ) -> np.ndarray:
        """X_H(p) = Π^♯(dH)"""
        return self.matrix_at(p).T @ hamiltonian.grad(p, params)

    def rank_at(self, p: Sequence[float], tol_rank: float = LabDefaults.TOL_RANK) -> int:
        """
        數值秩（= 葉的維度）

        Raises:
            OddRankError: 秩為奇數（容差失效的訊號）
        """
        s = singular_values(self.matrix_at(p))
        if s.size == 0:
            return 0
        rank = int(np.count_nonzero(s >= rank_threshold(s, tol_rank, LabDefaults.RANK_FLOOR)))
        if rank % 2:
            raise OddRankError(p, rank, s)
        return rank

    def leaf_tangent_basis(self, p: Sequence[float], tol_rank: float = LabDefaults.TOL_RANK) -> np.ndarray:
        """T_pL = Im Π^♯_p 的正交基底（n × rank）。"""
        return column_basis(self.matrix_at(p), tol=tol_rank, floor=LabDefaults.RANK_FLOOR)

    # -------------------------------------------------------------------------
    # 葉上的辛形式
    # -------------------------------------------------------------------------

    def _preimages(
        self, matrix: np.ndarray, vectors: np.ndarray, tol_rank: float, residual_tol: float
    ) -> np.ndarray:
        alphas, *_ = np.linalg.lstsq(matrix.T, vectors, rcond=tol_rank)
        residuals = np.linalg.norm(matrix.T @ alphas - vectors, axis=0)
        norms = np.linalg.norm(vectors, axis=0)
        for residual, norm in zip(residuals, norms):
            if residual > residual_tol * norm:
                raise NotInLeafError(float(residual), float(norm))
        return alphas

    def leafwise_form(
        self,
        p: Sequence[float],
        u: Sequence[float],
        v: Sequence[float],
        tol_rank: float = LabDefaults.TOL_RANK,
        residual_tol: float = LabDefaults.LEAF_RESIDUAL,
    ) -> float:
        """
        ω_L(u, v) = −Π(α, β)，其中 sharp(α) = u、sharp(β) = v（pseudo-inverse 取 preimage）

        Raises:
            NotInLeafError: u 或 v 不在 Im Π^♯_p 內
        """
        vectors = np.column_stack([np.asarray(u, dtype=float), np.asarray(v, dtype=float)])
        matrix = self.matrix_at(p)
        alphas = self._preimages(matrix, vectors, tol_rank, residual_tol)
        return -antisymmetric_pairing(matrix, alphas[:, 0], alphas[:, 1])

    def leafwise_gram(
        self,
        p: Sequence[float],
        vectors: np.ndarray,
        tol_rank: float = LabDefaults.TOL_RANK,
        residual_tol: float = LabDefaults.LEAF_RESIDUAL,
    ) -> np.ndarray:
        """
        Gram 矩陣 G_ab = ω_L(v_a, v_b)，vectors 的欄為切向量 v_a。
        """
        vectors = np.asarray(vectors, dtype=float).reshape(self.dim, -1)
        matrix = self.matrix_at(p)
        alphas = self._preimages(matrix, vectors, tol_rank, residual_tol)
        return -(alphas.T @ matrix @ alphas)

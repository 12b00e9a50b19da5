"""
poisson - Poisson 代數核心

Chart、PoissonStructure（matrix_at / sharp / bracket / hamiltonian_vf / rank_at /
leafwise_form），以及 jacobiator、poisson_map_check、下半連續性檢查。
"""

from .chart import Chart, Grid
from .checks import (
    SemicontinuityReport,
    jacobiator,
    lower_semicontinuity_check,
    poisson_map_check,
)
from .structure import PoissonStructure, antisymmetric_pairing

__all__ = [
    "Chart",
    "Grid",
    "PoissonStructure",
    "antisymmetric_pairing",
    "jacobiator",
    "poisson_map_check",
    "lower_semicontinuity_check",
    "SemicontinuityReport",
]

"""
flows - Hamiltonian flow 積分、flow 組合與葉的探索
"""

from .integrator import FlowSpec, Trajectory, compose_flows, integrate, rk4_step, vector_field
from .leaves import LeafProbe, leaf_dim_map, same_leaf_probe
from .maps import FlowMap, flow_map

__all__ = [
    "FlowSpec",
    "Trajectory",
    "integrate",
    "compose_flows",
    "rk4_step",
    "vector_field",
    "flow_map",
    "FlowMap",
    "leaf_dim_map",
    "same_leaf_probe",
    "LeafProbe",
]

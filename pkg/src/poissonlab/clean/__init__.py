"""
clean - clean 交點分類、clean locus 掃描與葉內 coisotropy
"""

from .atlas import LeafAtlas, LeafRegion
from .classify import (
    CLEAN_KINDS,
    CleanKind,
    CleanVerdict,
    IntersectionEstimate,
    TangentData,
    classify,
    intersection_dim_estimate,
    tangent_data,
    tangent_leaf_intersection_dim,
)
from .leafwise import (
    CoincidenceResult,
    characteristic_coincidence,
    characteristic_kernel,
    intersection_space,
    leafwise_coisotropy_check,
)
from .scan import ScanResult, clean_locus_scan

__all__ = [
    "LeafAtlas",
    "LeafRegion",
    "CleanKind",
    "CLEAN_KINDS",
    "CleanVerdict",
    "TangentData",
    "IntersectionEstimate",
    "tangent_data",
    "tangent_leaf_intersection_dim",
    "intersection_dim_estimate",
    "classify",
    "ScanResult",
    "clean_locus_scan",
    "intersection_space",
    "leafwise_coisotropy_check",
    "characteristic_kernel",
    "characteristic_coincidence",
    "CoincidenceResult",
]

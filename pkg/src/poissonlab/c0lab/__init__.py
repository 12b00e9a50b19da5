"""
c0lab - C0 收斂實驗

映射族與 hameotopy 的 C0 收斂、葉的映射、葉上辛形式、特徵葉的像，
以及 C0 特徵分割的樣本探測。
"""

from .analysis import (
    C0Generator,
    CharImageReport,
    LeafImage,
    LeafMappingReport,
    PartitionProbe,
    c0_char_partition_probe,
    char_leaf_image_analysis,
    leaf_mapping_check,
    leaf_samples,
    leafwise_symplectic_check,
)
from .family import FamilyReport, MapFamily, c0_distance, verify_family
from .flows import ExpressionFlow, FlowAtTime, ImplicitShearFlow
from .hameotopy import (
    CasimirHameotopyReport,
    HameotopyFamily,
    HameotopyReport,
    casimir_hameotopy_check,
    run_hameotopy,
)
from .maps import SmoothMap

__all__ = [
    "SmoothMap",
    "MapFamily",
    "FamilyReport",
    "c0_distance",
    "verify_family",
    "ExpressionFlow",
    "ImplicitShearFlow",
    "FlowAtTime",
    "HameotopyFamily",
    "HameotopyReport",
    "run_hameotopy",
    "CasimirHameotopyReport",
    "casimir_hameotopy_check",
    "LeafMappingReport",
    "leaf_samples",
    "leaf_mapping_check",
    "leafwise_symplectic_check",
    "LeafImage",
    "CharImageReport",
    "char_leaf_image_analysis",
    "C0Generator",
    "PartitionProbe",
    "c0_char_partition_probe",
]

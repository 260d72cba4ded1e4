"""Hierarchical clustering of metric spaces with interval-valued distances.

The package provides the two extremal admissible clustering methods for
finite metric spaces whose pairwise distances are only known to lie in
intervals, the dendrogram/ultrametric bijection, mechanical checkers for
the axioms the methods satisfy, and two application pipelines (moving-point
snapshots, network comparison via distance bounds).
"""

from .core import (
    Confidence,
    DEFAULT_CLAMP,
    IntervalMetricSpace,
    InvalidSpaceError,
    SizeLimitError,
    SpaceFormatError,
    ValidationReport,
    Violation,
    clamp_zero_lower,
    from_metric,
    space_from_json,
    space_to_json,
    two_node_space,
    validate,
)
from .chains import (
    ChainCosts,
    ORACLE_LIMIT,
    brute_force_minimax,
    chain_costs,
    minimax_closure,
)
from .methods import (
    CombinedDissimilarity,
    UltrametricSpace,
    alpha_separation,
    cluster_and_combine,
    combine_and_cluster,
    combined_dissimilarity,
    separation_metric,
    single_linkage,
)
from .dendro import (
    Dendrogram,
    DendrogramError,
    Merge,
    Partition,
    UltrametricError,
    canonical_form,
    cut,
    cut_k,
    dendrogram_to_ultrametric,
    to_json,
    to_newick,
    to_svg,
    ultrametric_to_dendrogram,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

"""Sliding-window clustering: k-median/k-means summaries and coreset maintenance."""

from .core import (
    CenterSet,
    ClusteringAssignment,
    DistanceMode,
    Point,
    WeightedPoint,
    WindowStream,
    assign,
    cost,
    dist,
    load_points_csv,
)
from .coreset import (
    CoresetPoint,
    CoresetWithPartition,
    PartitionResult,
    Region,
    RegionKind,
    chen_partition,
    coreset_cost_error,
    eps_sample_size,
    hpm_partition,
    slack_perturbation_check,
    unified_sample,
)
from .harness import ExperimentConfig, GeneratorSpec, generate_stream, run_experiment
from .merge_reduce import MergeReduceState, mr_coreset, mr_insert
from .offline import (
    ClusteringMapWithCounts,
    brute_force_opt,
    check_smoothness_bound,
    clustering_map_with_counts,
    local_search_kmedian,
)
from .pls import PlsParams, PlsState, Summary, pls_insert, pls_new, pls_snapshot, summary_kcenters
from .sw_coreset import SwCoresetState, region_interval_weight, swc_insert, swc_query
from .sw_median import SwMedianState, sw_insert, sw_query, sw_update

__version__ = "0.1.0"

__all__ = [
    "CenterSet",
    "ClusteringAssignment",
    "ClusteringMapWithCounts",
    "CoresetPoint",
    "CoresetWithPartition",
    "DistanceMode",
    "ExperimentConfig",
    "GeneratorSpec",
    "MergeReduceState",
    "PartitionResult",
    "PlsParams",
    "PlsState",
    "Point",
    "Region",
    "RegionKind",
    "Summary",
    "SwCoresetState",
    "SwMedianState",
    "WeightedPoint",
    "WindowStream",
    "assign",
    "brute_force_opt",
    "check_smoothness_bound",
    "chen_partition",
    "clustering_map_with_counts",
    "coreset_cost_error",
    "cost",
    "dist",
    "eps_sample_size",
    "generate_stream",
    "hpm_partition",
    "load_points_csv",
    "local_search_kmedian",
    "mr_coreset",
    "mr_insert",
    "pls_insert",
    "pls_new",
    "pls_snapshot",
    "region_interval_weight",
    "run_experiment",
    "slack_perturbation_check",
    "summary_kcenters",
    "sw_insert",
    "sw_query",
    "sw_update",
    "swc_insert",
    "swc_query",
    "unified_sample",
]

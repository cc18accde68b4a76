"""Temporal-commonsense tuple mining, soft targets and rank-distance metrics."""

from ._core import (
    DIMENSIONS,
    UNITS,
    build_soft_target,
    circular_distance,
    extract_corpus,
    extract_sentence,
    instance_weight,
    labels,
    logsec,
    mean_distance,
    nearest_unit,
    normalized_mean_distance,
    rank_distance,
    balance_dimensions,
)

__all__ = [
    "DIMENSIONS",
    "UNITS",
    "balance_dimensions",
    "build_soft_target",
    "circular_distance",
    "extract_corpus",
    "extract_sentence",
    "instance_weight",
    "labels",
    "logsec",
    "mean_distance",
    "nearest_unit",
    "normalized_mean_distance",
    "rank_distance",
]

"""Cluster-center initializers: BIRCH CF-tree and K-means variants."""
from .birch import (
    BirchConfig,
    CFEntry,
    CFNode,
    CFTree,
    birch_init,
    build_tree,
    cf_insert,
    cf_radius,
    tune_threshold,
)
from .kmeans import Centroids, kmeans_init, lloyd

__all__ = [
    "BirchConfig", "CFEntry", "CFNode", "CFTree", "Centroids", "birch_init",
    "build_tree", "cf_insert", "cf_radius", "kmeans_init", "lloyd", "tune_threshold",
]

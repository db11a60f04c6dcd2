"""Hierarchical kNN-graph index for approximate nearest neighbor search.

Distances are squared Euclidean. ``Index.search`` returns ``(ids, dists)``
arrays of shape ``(m, k)`` sorted ascending; unfilled entries are ``-1``/``inf``.
"""

from ._ggnn import (
    ConfigError,
    FormatError,
    Index,
    IoError,
    ShardedIndex,
    brute_force,
    k_recall_at_k,
    load_ids,
    load_vectors,
    recall_at,
    write_vectors,
)

__all__ = [
    "ConfigError",
    "FormatError",
    "Index",
    "IoError",
    "ShardedIndex",
    "brute_force",
    "k_recall_at_k",
    "load_ids",
    "load_vectors",
    "recall_at",
    "write_vectors",
]

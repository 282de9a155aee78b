"""
Interaction Data Models
=======================
Users, items and their observed interactions, from raw records to the
normalized bipartite graph.

All arrays are numpy; matrices are scipy.sparse CSR. Everything here is
immutable once built and safe to share between readers.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Tuple

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class RawInteractions:
    """
    Deduplicated interactions with contiguous indices.

    Record k is (user_ids[users[k]], item_ids[items[k]]); indices were
    assigned in first-seen order. `ratings` holds the optional rating column
    (1.0 where absent) and is only consumed by LFA pretraining.
    """

    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    user_ids: Tuple[str, ...]
    item_ids: Tuple[str, ...]
    lines_read: int = 0
    duplicates_dropped: int = 0
    malformed_skipped: int = 0

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    @property
    def n_interactions(self) -> int:
        return len(self.users)

    @cached_property
    def user_index(self) -> Dict[str, int]:
        return {uid: k for k, uid in enumerate(self.user_ids)}

    @cached_property
    def item_index(self) -> Dict[str, int]:
        return {iid: k for k, iid in enumerate(self.item_ids)}

    @property
    def records(self) -> list[Tuple[str, str]]:
        return [(self.user_ids[u], self.item_ids[i]) for u, i in zip(self.users, self.items)]


@dataclass(frozen=True)
class EdgeList:
    """Index-sorted (user, item, rating) triples of one split."""

    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray

    def __len__(self) -> int:
        return len(self.users)

    @classmethod
    def sorted_from(cls, users: np.ndarray, items: np.ndarray, ratings: np.ndarray) -> "EdgeList":
        order = np.lexsort((items, users))
        return cls(
            users=np.ascontiguousarray(users[order], dtype=np.int64),
            items=np.ascontiguousarray(items[order], dtype=np.int64),
            ratings=np.ascontiguousarray(ratings[order], dtype=np.float64),
        )

    @classmethod
    def empty(cls) -> "EdgeList":
        return cls(np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.float64))


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint train / validation / test edge lists (7:1:2)."""

    train: EdgeList
    validation: EdgeList
    test: EdgeList
    split_seed: int
    n_users: int
    n_items: int

    def edges(self, name: str) -> EdgeList:
        if name not in ("train", "validation", "test"):
            raise ValueError(f"unknown split '{name}'")
        return getattr(self, name)


@dataclass(frozen=True)
class InteractionGraph:
    """
    Binary train adjacency A (|U| x |I|) and its symmetric normalization
    A_tilde[u, i] = 1 / sqrt(deg(u) * deg(i)).

    Both matrices share one sparsity pattern with sorted indices. Zero-degree
    users/items simply have empty rows/columns.
    """

    n_users: int
    n_items: int
    adjacency: sp.csr_matrix
    normalized: sp.csr_matrix
    user_degrees: np.ndarray
    item_degrees: np.ndarray

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.nnz)

    @cached_property
    def edge_users(self) -> np.ndarray:
        """Row index of every stored entry, in CSR order."""
        return np.repeat(np.arange(self.n_users, dtype=np.int64), np.diff(self.adjacency.indptr))

    @cached_property
    def edge_items(self) -> np.ndarray:
        return self.adjacency.indices.astype(np.int64)

    @cached_property
    def edge_keys(self) -> np.ndarray:
        """Sorted u * |I| + i keys for fast membership tests."""
        return self.edge_users * self.n_items + self.edge_items

    def user_items(self, user: int) -> np.ndarray:
        start, stop = self.adjacency.indptr[user], self.adjacency.indptr[user + 1]
        return self.adjacency.indices[start:stop]

    def has_edges(self, users: np.ndarray, items: np.ndarray) -> np.ndarray:
        keys = np.asarray(users, dtype=np.int64) * self.n_items + np.asarray(items, dtype=np.int64)
        if len(self.edge_keys) == 0:
            return np.zeros(len(keys), dtype=bool)
        pos = np.minimum(np.searchsorted(self.edge_keys, keys), len(self.edge_keys) - 1)
        return self.edge_keys[pos] == keys


@dataclass(frozen=True)
class SparsityGroups:
    """
    Users partitioned into equal-count buckets by training degree.

    `boundaries[g]` is the (min, max) degree inside group g; `assignment[u]`
    is the group of user u.
    """

    assignment: np.ndarray
    boundaries: Tuple[Tuple[int, int], ...]
    sizes: Tuple[int, ...] = field(default=())

    @property
    def n_groups(self) -> int:
        return len(self.boundaries)

    def members(self, group: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == group)


@dataclass(frozen=True)
class DatasetBundle:
    """A prepared dataset: split edges plus the graph built from train."""

    split: DatasetSplit
    graph: InteractionGraph
    user_ids: Tuple[str, ...] = ()
    item_ids: Tuple[str, ...] = ()

    @property
    def n_users(self) -> int:
        return self.split.n_users

    @property
    def n_items(self) -> int:
        return self.split.n_items

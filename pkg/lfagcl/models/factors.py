"""
Latent Factor Models
====================
The pretrained factor pair (P, Q) and the observed entries it is fit on.
"""

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from lfagcl.models.interactions import EdgeList


@dataclass(frozen=True)
class LatentFactors:
    """
    P (|U| x f) and Q (|I| x f) defining R_hat = P Q^T.

    R_hat is never materialized; callers use row dot products or the factored
    products P (Q^T X) / Q (P^T X).
    """

    P: np.ndarray
    Q: np.ndarray
    lfa_lambda: float

    @property
    def f(self) -> int:
        return self.P.shape[1]

    @property
    def n_users(self) -> int:
        return self.P.shape[0]

    @property
    def n_items(self) -> int:
        return self.Q.shape[0]

    def with_side(self, side: str, matrix: np.ndarray) -> "LatentFactors":
        return replace(self, P=matrix) if side == "user" else replace(self, Q=matrix)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.P).all() and np.isfinite(self.Q).all())


@dataclass(frozen=True)
class ObservedEntries:
    """
    The observed set of (u, i, r_ui) the LFA objective sums over.

    Built from the train split; r_ui is the rating column where one was
    supplied and 1.0 otherwise.
    """

    users: np.ndarray
    items: np.ndarray
    values: np.ndarray
    n_users: int
    n_items: int

    @classmethod
    def from_edges(cls, edges: EdgeList, n_users: int, n_items: int) -> "ObservedEntries":
        return cls(edges.users, edges.items, edges.ratings.astype(np.float64), n_users, n_items)

    @classmethod
    def from_dense(cls, matrix: np.ndarray, mask: np.ndarray | None = None) -> "ObservedEntries":
        """Entries of a dense matrix (all of them, or where `mask` is true)."""
        if mask is None:
            mask = np.ones(matrix.shape, dtype=bool)
        users, items = np.nonzero(mask)
        return cls(users.astype(np.int64), items.astype(np.int64), matrix[users, items].astype(np.float64),
                   matrix.shape[0], matrix.shape[1])

    def __len__(self) -> int:
        return len(self.users)

    @cached_property
    def by_user(self) -> sp.csr_matrix:
        """Values as a |U| x |I| CSR matrix."""
        return sp.csr_matrix((self.values, (self.users, self.items)), shape=(self.n_users, self.n_items))

    @cached_property
    def by_item(self) -> sp.csr_matrix:
        return self.by_user.T.tocsr()

    @cached_property
    def user_counts(self) -> np.ndarray:
        return np.bincount(self.users, minlength=self.n_users)

    @cached_property
    def item_counts(self) -> np.ndarray:
        return np.bincount(self.items, minlength=self.n_items)

    @cached_property
    def user_pattern(self) -> sp.csr_matrix:
        """Binary |U| x |I| indicator of observed entries (explicit zeros included)."""
        ones = np.ones(len(self.users), dtype=np.float64)
        return sp.csr_matrix((ones, (self.users, self.items)), shape=(self.n_users, self.n_items))

    @cached_property
    def item_pattern(self) -> sp.csr_matrix:
        return self.user_pattern.T.tocsr()

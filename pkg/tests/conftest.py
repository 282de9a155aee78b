"""
Shared Test Fixtures
====================
Small random graphs, a block-structured synthetic dataset and interaction
files on disk.
"""

from typing import Callable, Optional

import numpy as np
import pytest

from lfagcl.models.embeddings import EmbeddingTables
from lfagcl.models.factors import LatentFactors
from lfagcl.models.interactions import DatasetBundle, DatasetSplit, EdgeList, RawInteractions
from lfagcl.services.interactions import bundle_from_split, make_bundle


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: directional experiments that train several models")


def edges_from_pairs(pairs) -> EdgeList:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    return EdgeList.sorted_from(pairs[:, 0], pairs[:, 1], np.ones(len(pairs)))


def bundle_from_pairs(train, n_users: int, n_items: int, validation=(), test=()) -> DatasetBundle:
    split = DatasetSplit(
        train=edges_from_pairs(train),
        validation=edges_from_pairs(validation),
        test=edges_from_pairs(test),
        split_seed=0,
        n_users=n_users,
        n_items=n_items,
    )
    return bundle_from_split(split)


def random_pairs(n_users: int, n_items: int, density: float, rng: np.random.Generator) -> np.ndarray:
    """Unique random (u, i) pairs; every user gets at least one item."""
    mask = rng.random((n_users, n_items)) < density
    mask[np.arange(n_users), rng.integers(0, n_items, size=n_users)] = True
    return np.argwhere(mask)


def raw_from_pairs(pairs: np.ndarray, n_users: int, n_items: int) -> RawInteractions:
    return RawInteractions(
        users=pairs[:, 0].astype(np.int64),
        items=pairs[:, 1].astype(np.int64),
        ratings=np.ones(len(pairs)),
        user_ids=tuple(f"u{u}" for u in range(n_users)),
        item_ids=tuple(f"i{i}" for i in range(n_items)),
    )


def block_interactions(n_users: int = 200, n_items: int = 300, n_blocks: int = 10, density: float = 0.02,
                       in_block_share: float = 0.9, seed: int = 0) -> RawInteractions:
    """
    Users and items are assigned to latent blocks; most interactions fall
    inside the user's block. Shuffled so the record order carries no signal.
    """
    rng = np.random.default_rng(seed)
    user_block = rng.integers(0, n_blocks, size=n_users)
    item_block = rng.integers(0, n_blocks, size=n_items)
    n_target = int(density * n_users * n_items)

    seen = set()
    pairs = []
    while len(pairs) < n_target:
        u = int(rng.integers(0, n_users))
        if rng.random() < in_block_share:
            candidates = np.flatnonzero(item_block == user_block[u])
            if len(candidates) == 0:
                continue
            i = int(rng.choice(candidates))
        else:
            i = int(rng.integers(0, n_items))
        if (u, i) not in seen:
            seen.add((u, i))
            pairs.append((u, i))
    return raw_from_pairs(np.array(pairs), n_users, n_items)


def random_embeddings(n_users: int, n_items: int, d: int, rng: np.random.Generator) -> EmbeddingTables:
    return EmbeddingTables(rng.normal(size=(n_users, d)), rng.normal(size=(n_items, d)))


def random_factors(n_users: int, n_items: int, f: int, rng: np.random.Generator) -> LatentFactors:
    return LatentFactors(P=rng.normal(size=(n_users, f)), Q=rng.normal(size=(n_items, f)), lfa_lambda=0.1)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def small_bundle(rng) -> DatasetBundle:
    """12 users x 15 items, roughly 30% dense train graph."""
    return bundle_from_pairs(random_pairs(12, 15, 0.3, rng), 12, 15)


@pytest.fixture
def block_bundle() -> Callable[..., DatasetBundle]:
    def build(seed: int = 0, **kwargs) -> DatasetBundle:
        return make_bundle(block_interactions(seed=seed, **kwargs), seed)
    return build


@pytest.fixture
def interaction_file(tmp_path) -> Callable[[str, Optional[str]], str]:
    def write(content: str, name: Optional[str] = None) -> str:
        path = tmp_path / (name or "interactions.tsv")
        path.write_text(content, encoding="utf-8")
        return str(path)
    return write

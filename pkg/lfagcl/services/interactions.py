"""
Interaction Data Operations
===========================
Ingest raw user-item interactions, split them 7:1:2, build the normalized
bipartite graph and bucket users by training degree.

Pipeline:
  load_interactions -> split_dataset -> build_graph -> group_users_by_degree
"""

import csv
import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
import scipy.sparse as sp

from lfagcl.core.exceptions import DataFormatError, DatasetIOError, GroupingError, SplitError
from lfagcl.models.interactions import (
    DatasetBundle,
    DatasetSplit,
    EdgeList,
    InteractionGraph,
    RawInteractions,
    SparsityGroups,
)
from lfagcl.schemas.report import DatasetStats
from lfagcl.utils.helpers import format_number

logger = logging.getLogger(__name__)

COLUMNS = ["user", "item", "rating", "timestamp"]
MIN_SPLIT_SIZE = 10


def load_interactions(path: str | Path, delimiter: str = "\t") -> RawInteractions:
    """
    Read one interaction per line: user id, item id, then optional rating and
    timestamp (ignored). Blank lines are skipped; lines without both ids are
    counted as malformed. Duplicate (user, item) pairs keep their first rating.

    Raises:
        DatasetIOError: the file cannot be read
        DataFormatError: no valid interaction was found
    """
    path = Path(path)
    too_long = 0

    def keep_leading_fields(fields: list[str]) -> list[str]:
        nonlocal too_long
        too_long += 1
        return fields[: len(COLUMNS)]

    try:
        frame = pd.read_csv(
            path,
            sep=delimiter,
            header=None,
            names=COLUMNS,
            dtype=str,
            engine="python",
            quoting=csv.QUOTE_NONE,
            keep_default_na=False,
            skip_blank_lines=True,
            on_bad_lines=keep_leading_fields,
        )
    except pd.errors.EmptyDataError as e:
        logger.error(f"No interactions in {path}")
        raise DataFormatError(f"{path} contains no interactions") from e
    except UnicodeDecodeError as e:
        raise DataFormatError(f"{path} is not valid UTF-8 text") from e
    except OSError as e:
        logger.error(f"Cannot read {path}: {e}")
        raise DatasetIOError(f"cannot read {path}: {e}") from e

    lines_read = len(frame)
    users = frame["user"].fillna("").str.strip()
    items = frame["item"].fillna("").str.strip()
    valid = (users != "") & (items != "")
    malformed = int((~valid).sum())

    if not valid.any():
        logger.error(f"No valid interactions in {path} ({lines_read} lines, {malformed} malformed)")
        raise DataFormatError(f"{path} contains no valid interactions")

    users, items = users[valid], items[valid]
    ratings = pd.to_numeric(frame.loc[valid, "rating"], errors="coerce").fillna(1.0)

    # factorize keeps first-seen order
    user_codes, user_ids = pd.factorize(users, sort=False)
    item_codes, item_ids = pd.factorize(items, sort=False)

    pairs = pd.DataFrame({"u": user_codes, "i": item_codes})
    duplicated = pairs.duplicated(keep="first").to_numpy()
    keep = ~duplicated

    raw = RawInteractions(
        users=user_codes[keep].astype(np.int64),
        items=item_codes[keep].astype(np.int64),
        ratings=ratings.to_numpy(dtype=np.float64)[keep],
        user_ids=tuple(str(u) for u in user_ids),
        item_ids=tuple(str(i) for i in item_ids),
        lines_read=lines_read,
        duplicates_dropped=int(duplicated.sum()),
        malformed_skipped=malformed,
    )
    logger.info(
        f"Loaded {raw.n_interactions} interactions from {path}: {raw.n_users} users, {raw.n_items} items "
        f"({lines_read} lines, {raw.duplicates_dropped} duplicates, {malformed} malformed, "
        f"{too_long} truncated)"
    )
    return raw


def split_dataset(raw: RawInteractions, seed: int) -> DatasetSplit:
    """
    Global uniform shuffle under `seed`, cut at floor(0.7n) and floor(0.8n).

    Each split is returned index-sorted, so the result is a pure function of
    (raw, seed).
    """
    n = raw.n_interactions
    if n < MIN_SPLIT_SIZE:
        logger.error(f"Refusing to split {n} interactions")
        raise SplitError(f"need at least {MIN_SPLIT_SIZE} interactions to split, got {n}")

    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    # integer cut points; 0.7 * n in floating point can round below the true floor
    first_cut, second_cut = 7 * n // 10, 8 * n // 10

    def take(index: np.ndarray) -> EdgeList:
        return EdgeList.sorted_from(raw.users[index], raw.items[index], raw.ratings[index])

    split = DatasetSplit(
        train=take(perm[:first_cut]),
        validation=take(perm[first_cut:second_cut]),
        test=take(perm[second_cut:]),
        split_seed=seed,
        n_users=raw.n_users,
        n_items=raw.n_items,
    )
    logger.info(f"Split {n} interactions into {len(split.train)}/{len(split.validation)}/{len(split.test)}")
    return split


def build_graph(split: DatasetSplit) -> InteractionGraph:
    """Binary train adjacency A and A_tilde = D_u^-1/2 A D_i^-1/2, from train edges only."""
    train = split.train
    if len(train) == 0:
        raise DataFormatError("the train split is empty")

    shape = (split.n_users, split.n_items)
    adjacency = sp.csr_matrix(
        (np.ones(len(train), dtype=np.float64), (train.users, train.items)), shape=shape
    )
    adjacency.sum_duplicates()
    adjacency.sort_indices()
    adjacency.data[:] = 1.0

    user_degrees = np.diff(adjacency.indptr).astype(np.int64)
    item_degrees = np.bincount(adjacency.indices, minlength=split.n_items).astype(np.int64)

    rows = np.repeat(np.arange(split.n_users), user_degrees)
    cols = adjacency.indices
    values = 1.0 / np.sqrt(user_degrees[rows].astype(np.float64) * item_degrees[cols].astype(np.float64))
    normalized = sp.csr_matrix((values, adjacency.indices.copy(), adjacency.indptr.copy()), shape=shape)

    return InteractionGraph(
        n_users=split.n_users,
        n_items=split.n_items,
        adjacency=adjacency,
        normalized=normalized,
        user_degrees=user_degrees,
        item_degrees=item_degrees,
    )


def group_users_by_degree(graph: InteractionGraph, n_groups: int = 5) -> SparsityGroups:
    """
    Sort users by (train degree, user index) and cut them into `n_groups`
    contiguous buckets of near-equal size; the first `n % n_groups` buckets
    get one extra user.
    """
    if n_groups < 2:
        raise GroupingError(f"need at least 2 groups, got {n_groups}")
    n_users = graph.n_users
    if n_users < n_groups:
        raise GroupingError(f"{n_users} users cannot fill {n_groups} groups")

    degrees = graph.user_degrees
    order = np.lexsort((np.arange(n_users), degrees))

    base, remainder = divmod(n_users, n_groups)
    sizes = [base + 1 if g < remainder else base for g in range(n_groups)]

    assignment = np.empty(n_users, dtype=np.int64)
    boundaries = []
    start = 0
    for g, size in enumerate(sizes):
        members = order[start:start + size]
        assignment[members] = g
        boundaries.append((int(degrees[members].min()), int(degrees[members].max())))
        start += size

    return SparsityGroups(assignment=assignment, boundaries=tuple(boundaries), sizes=tuple(sizes))


def dataset_stats(raw: RawInteractions, split: Optional[DatasetSplit] = None, name: str = "dataset") -> DatasetStats:
    """Users, items, interactions and density = interactions / (users * items)."""
    density = raw.n_interactions / float(raw.n_users * raw.n_items)
    return DatasetStats(
        name=name,
        n_users=raw.n_users,
        n_items=raw.n_items,
        n_interactions=raw.n_interactions,
        density=density,
        n_train=len(split.train) if split else 0,
        n_validation=len(split.validation) if split else 0,
        n_test=len(split.test) if split else 0,
        lines_read=raw.lines_read,
        duplicates_dropped=raw.duplicates_dropped,
        malformed_skipped=raw.malformed_skipped,
    )


def make_bundle(raw: RawInteractions, seed: int) -> DatasetBundle:
    """Split `raw` and build the train graph in one step."""
    split = split_dataset(raw, seed)
    return DatasetBundle(split=split, graph=build_graph(split), user_ids=raw.user_ids, item_ids=raw.item_ids)


def bundle_from_split(split: DatasetSplit, user_ids=(), item_ids=()) -> DatasetBundle:
    return DatasetBundle(split=split, graph=build_graph(split), user_ids=tuple(user_ids), item_ids=tuple(item_ids))


STATS_COLUMNS = ("Dataset", "#Users", "#Items", "#Interaction", "Density")


def stats_table(stats: DatasetStats, sep: str = "\t") -> str:
    """Dataset-statistics row under its header, density with 6 significant digits."""
    row = (stats.name, str(stats.n_users), str(stats.n_items), str(stats.n_interactions), format_number(stats.density))
    lines = [sep.join(STATS_COLUMNS), sep.join(row)]
    if stats.n_train:
        lines.append(f"split: train={stats.n_train} validation={stats.n_validation} test={stats.n_test}")
    return "\n".join(lines) + "\n"

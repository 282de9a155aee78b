"""
Dataset Bundle Codec
====================
Layout after the common header:

    n_users u64, n_items u64, split_seed i64
    per split (train, validation, test):
        n u64, users i64[n], items i64[n], ratings f64[n]   (index-sorted)
    user ids, item ids: length-prefixed UTF-8, newline-joined

The graph is rebuilt from the train edges on load.
"""

import numpy as np

from lfagcl.core.exceptions import CheckpointFormatError
from lfagcl.models.interactions import DatasetBundle, DatasetSplit, EdgeList
from lfagcl.services.interactions import bundle_from_split
from lfagcl.storage.base import BinaryCodec, BinaryReader, BinaryWriter

SPLITS = ("train", "validation", "test")


def _encode_ids(writer: BinaryWriter, ids: tuple[str, ...]) -> None:
    writer.u64(len(ids))
    writer.text("\n".join(ids))


def _decode_ids(reader: BinaryReader, section: str) -> tuple[str, ...]:
    count = reader.u64(section)
    joined = reader.text(section)
    ids = tuple(joined.split("\n")) if count else ()
    if len(ids) != count:
        raise CheckpointFormatError(f"expected {count} ids, found {len(ids)}", section)
    return ids


class DatasetBundleCodec(BinaryCodec[DatasetBundle]):
    magic = b"LFAGCLDS"
    version = 1
    kind = "dataset bundle"

    def encode_body(self, bundle: DatasetBundle, writer: BinaryWriter) -> None:
        split = bundle.split
        writer.u64(split.n_users)
        writer.u64(split.n_items)
        writer.i64(split.split_seed)
        for name in SPLITS:
            edges = split.edges(name)
            writer.u64(len(edges))
            writer.array(edges.users, "<i8")
            writer.array(edges.items, "<i8")
            writer.array(edges.ratings, "<f8")
        _encode_ids(writer, bundle.user_ids)
        _encode_ids(writer, bundle.item_ids)

    def decode_body(self, reader: BinaryReader, **options) -> DatasetBundle:
        n_users = reader.u64("header")
        n_items = reader.u64("header")
        split_seed = reader.i64("header")

        parts = {}
        for name in SPLITS:
            n = reader.u64(name)
            users = reader.array("<i8", (n,), name)
            items = reader.array("<i8", (n,), name)
            ratings = reader.array("<f8", (n,), name)
            if n and (users.min() < 0 or users.max() >= n_users or items.min() < 0 or items.max() >= n_items):
                raise CheckpointFormatError("edge index out of range", name)
            parts[name] = EdgeList(users, items, ratings)
        if len(parts["train"]) == 0:
            raise CheckpointFormatError("train split is empty", "train")

        user_ids = _decode_ids(reader, "user_ids")
        item_ids = _decode_ids(reader, "item_ids")
        if user_ids and len(user_ids) != n_users:
            raise CheckpointFormatError(f"{len(user_ids)} user ids for {n_users} users", "user_ids")
        if item_ids and len(item_ids) != n_items:
            raise CheckpointFormatError(f"{len(item_ids)} item ids for {n_items} items", "item_ids")

        split = DatasetSplit(split_seed=split_seed, n_users=n_users, n_items=n_items, **parts)
        return bundle_from_split(split, user_ids, item_ids)


dataset_bundle = DatasetBundleCodec()

"""
Checkpoint Codecs
=================
LFA factor checkpoint (after the common header):

    |U| u64, |I| u64, f u64, lambda f64, P f64[|U| x f], Q f64[|I| x f]

Model checkpoint:

    |U| u64, |I| u64, d u64
    config hash (32 bytes), config JSON (length-prefixed)
    user_base f64[|U| x d], item_base f64[|I| x d]
    LFA factors (same body as the factor checkpoint)
    Adam: step u64, beta1 f64, beta2 f64, eps f64, then first and second
    moments of user_base and item_base

All matrices are row-major.
"""

from typing import Optional

import numpy as np
from pydantic import ValidationError

from lfagcl.core.exceptions import CheckpointFormatError, DimensionMismatchError
from lfagcl.models.embeddings import EmbeddingTables
from lfagcl.models.factors import LatentFactors
from lfagcl.models.model import AdamState, LfaGclModel
from lfagcl.schemas.training import TrainConfig
from lfagcl.storage.base import BinaryCodec, BinaryReader, BinaryWriter
from lfagcl.utils.helpers import config_hash

PARAM_NAMES = ("user_base", "item_base")


def _encode_factors(factors: LatentFactors, writer: BinaryWriter) -> None:
    writer.u64(factors.n_users)
    writer.u64(factors.n_items)
    writer.u64(factors.f)
    writer.f64(factors.lfa_lambda)
    writer.array(factors.P, "<f8")
    writer.array(factors.Q, "<f8")


def _decode_factors(reader: BinaryReader) -> LatentFactors:
    n_users = reader.u64("factors")
    n_items = reader.u64("factors")
    f = reader.u64("factors")
    lfa_lambda = reader.f64("factors")
    P = reader.array("<f8", (n_users, f), "P")
    Q = reader.array("<f8", (n_items, f), "Q")
    return LatentFactors(P=P, Q=Q, lfa_lambda=lfa_lambda)


class LfaCheckpointCodec(BinaryCodec[LatentFactors]):
    magic = b"LFAGCLLF"
    version = 1
    kind = "LFA checkpoint"

    def encode_body(self, factors: LatentFactors, writer: BinaryWriter) -> None:
        _encode_factors(factors, writer)

    def decode_body(self, reader: BinaryReader, **options) -> LatentFactors:
        return _decode_factors(reader)


class ModelCheckpointCodec(BinaryCodec[LfaGclModel]):
    magic = b"LFAGCLMD"
    version = 1
    kind = "model checkpoint"

    def encode_body(self, model: LfaGclModel, writer: BinaryWriter) -> None:
        emb = model.embeddings
        writer.u64(emb.user_base.shape[0])
        writer.u64(emb.item_base.shape[0])
        writer.u64(emb.d)
        writer.raw(model.config_hash)
        writer.text(model.config.model_dump_json())
        writer.array(emb.user_base, "<f8")
        writer.array(emb.item_base, "<f8")
        _encode_factors(model.factors, writer)

        adam = model.optimizer
        writer.u64(adam.step_count)
        writer.f64(adam.beta1)
        writer.f64(adam.beta2)
        writer.f64(adam.epsilon)
        params = emb.as_params()
        for moments in (adam.first_moment, adam.second_moment):
            for name in PARAM_NAMES:
                writer.array(moments.get(name, np.zeros_like(params[name])), "<f8")

    def decode_body(self, reader: BinaryReader, expected: Optional[TrainConfig] = None, **options) -> LfaGclModel:
        """
        Args:
            expected: run config the checkpoint must be compatible with; a
                different embedding size raises DimensionMismatchError
        """
        n_users = reader.u64("header")
        n_items = reader.u64("header")
        d = reader.u64("header")
        if expected is not None and expected.embed_dim != d:
            raise DimensionMismatchError(
                f"checkpoint has embedding size {d}, run config expects {expected.embed_dim}", "header"
            )

        stored_hash = reader.raw(32, "config")
        try:
            config = TrainConfig.model_validate_json(reader.text("config"))
        except ValidationError as e:
            raise CheckpointFormatError(f"invalid stored config: {e.error_count()} errors", "config") from e
        if config_hash(config.model_dump(mode="json")) != stored_hash:
            raise CheckpointFormatError("config hash does not match the stored config", "config")

        user_base = reader.array("<f8", (n_users, d), "user_base")
        item_base = reader.array("<f8", (n_items, d), "item_base")
        factors = _decode_factors(reader)
        if factors.n_users != n_users or factors.n_items != n_items:
            raise DimensionMismatchError(
                f"factors are {factors.n_users} x {factors.n_items}, embeddings {n_users} x {n_items}", "factors"
            )

        step_count = reader.u64("optimizer")
        beta1 = reader.f64("optimizer")
        beta2 = reader.f64("optimizer")
        epsilon = reader.f64("optimizer")
        shapes = {"user_base": (n_users, d), "item_base": (n_items, d)}
        first = {name: reader.array("<f8", shapes[name], "optimizer") for name in PARAM_NAMES}
        second = {name: reader.array("<f8", shapes[name], "optimizer") for name in PARAM_NAMES}

        return LfaGclModel(
            config=config,
            embeddings=EmbeddingTables(user_base=user_base, item_base=item_base),
            factors=factors,
            optimizer=AdamState(first_moment=first, second_moment=second, step_count=step_count,
                                beta1=beta1, beta2=beta2, epsilon=epsilon),
        )


lfa_checkpoint = LfaCheckpointCodec()
model_checkpoint = ModelCheckpointCodec()

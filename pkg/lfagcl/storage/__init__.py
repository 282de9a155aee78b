from lfagcl.storage.bundle import dataset_bundle
from lfagcl.storage.checkpoint import lfa_checkpoint, model_checkpoint

__all__ = ["dataset_bundle", "lfa_checkpoint", "model_checkpoint"]

"""Learned estimation of invisible subbands for limited-angle reconstructions.

This package talks to the reconstruction toolkit only through tensor
interchange files and its own command line; see README.md.
"""

from .infer import infer
from .model import SIZE_MULTIPLE, NetConfig, TdbUnet, TransitionDown, TransitionUp, TrimmedDenseBlock
from .tensorio import (
    KIND_COEFFS,
    KIND_IMAGE,
    KIND_SINOGRAM,
    SubbandRecord,
    TensorFile,
    TensorFormatError,
    ordering_hash,
    read_tensor,
    write_tensor,
)
from .train import (
    MetadataError,
    PairedDataset,
    TrainConfig,
    TrainingDivergedError,
    channel_weights,
    load_checkpoint,
    load_pairs,
    masked_loss,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "KIND_COEFFS",
    "KIND_IMAGE",
    "KIND_SINOGRAM",
    "MetadataError",
    "NetConfig",
    "PairedDataset",
    "SIZE_MULTIPLE",
    "SubbandRecord",
    "TdbUnet",
    "TensorFile",
    "TensorFormatError",
    "TrainConfig",
    "TrainingDivergedError",
    "TransitionDown",
    "TransitionUp",
    "TrimmedDenseBlock",
    "channel_weights",
    "infer",
    "load_checkpoint",
    "load_pairs",
    "masked_loss",
    "ordering_hash",
    "read_tensor",
    "save_checkpoint",
    "train",
    "write_tensor",
]

"""Inference: estimate invisible subbands for one coefficient file.

The input's subband enumeration must match the checkpoint's (compared by
ordering hash, which ignores visibility flags — those depend on the scan,
not the network).  Spatial sizes are handled by zero-padding up to the
network's granularity and cropping back, so any (H, W) is accepted.  Visible
subbands of the output are zeroed before writing: the caller combines this
file with the measured visible part, so this estimator never speaks there.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .model import SIZE_MULTIPLE
from .tensorio import KIND_COEFFS, TensorFile, ordering_hash, read_tensor, write_tensor
from .train import MetadataError, load_checkpoint


def _pad_to_multiple(x: torch.Tensor, multiple: int) -> tuple[torch.Tensor, int, int]:
    h, w = x.shape[-2:]
    pad_h = (-h) % multiple
    pad_w = (-w) % multiple
    if pad_h or pad_w:
        x = F.pad(x, (0, pad_w, 0, pad_h))
    return x, h, w


def infer(checkpoint_path: str | Path, in_path: str | Path, out_path: str | Path) -> None:
    """Run the checkpointed network on ``in_path`` and write the masked
    estimate to ``out_path``."""
    model, records, _ = load_checkpoint(checkpoint_path)
    tensor = read_tensor(in_path)
    if tensor.kind != KIND_COEFFS:
        raise MetadataError(f"{in_path}: expected coefficients, found {tensor.kind}")
    if tensor.data.shape[2] != len(records):
        raise MetadataError(
            f"{in_path}: {tensor.data.shape[2]} subbands, checkpoint has {len(records)}"
        )
    if ordering_hash(tensor.records) != ordering_hash(records):
        raise MetadataError(
            f"{in_path}: subband ordering does not match the checkpoint"
        )

    x = torch.from_numpy(np.moveaxis(tensor.data, 2, 0)).unsqueeze(0)
    x, h, w = _pad_to_multiple(x, SIZE_MULTIPLE)
    with torch.no_grad():
        estimate = model(x)[0, :, :h, :w].numpy()
    estimate = np.moveaxis(estimate, 0, 2).copy()

    visible = np.array([record.visible for record in tensor.records])
    estimate[:, :, visible] = 0.0
    write_tensor(TensorFile(KIND_COEFFS, estimate, tensor.records), out_path)

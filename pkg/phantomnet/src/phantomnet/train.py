"""Training loop: fit the network to predict invisible subbands of ground
truth from the reconstruction's coefficient stack.

A dataset directory holds paired files ``<stem>_input.lti`` (coefficients of
the data-consistent reconstruction) and ``<stem>_target.lti`` (coefficients
of the ground-truth image).  All files must agree on shape, subband
enumeration, and visibility flags; the loss is a weighted squared error
evaluated only on invisible entries, with per-scale weights ascending toward
fine scales (defaulting to the same 3^(s+1)/400 schedule the sparse solver
uses).  Training snapshots are recoverable: a non-finite loss saves the last
finite state before raising.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .model import SIZE_MULTIPLE, NetConfig, TdbUnet
from .tensorio import KIND_COEFFS, SubbandRecord, ordering_hash, read_tensor

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


class MetadataError(ValueError):
    """Dataset or checkpoint metadata is inconsistent."""


class TrainingDivergedError(RuntimeError):
    """The loss became non-finite; the last finite state was checkpointed."""


@dataclass(frozen=True)
class TrainConfig:
    """Optimization hyperparameters.

    ``patch_size`` is the square crop sampled on the fly from each training
    pair (64 for the mini preset, 320 at reference scale); it must be a
    multiple of the network's size granularity and no larger than the
    images.  ``scale_weights`` overrides the per-scale loss weights; None
    selects the solver's ascending schedule.
    """

    learning_rate: float = 1e-4
    patch_size: int = 64
    epochs: int = 12
    batch_size: int = 4
    seed: int = 0
    scale_weights: tuple[float, ...] | None = None
    lowpass_weight: float = 0.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.patch_size < SIZE_MULTIPLE or self.patch_size % SIZE_MULTIPLE:
            raise ValueError(f"patch_size must be a multiple of {SIZE_MULTIPLE}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.scale_weights is not None and any(w < 0 for w in self.scale_weights):
            raise ValueError("scale weights must be nonnegative")
        if self.lowpass_weight < 0:
            raise ValueError("lowpass_weight must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "patch_size": self.patch_size,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "scale_weights": self.scale_weights,
            "lowpass_weight": self.lowpass_weight,
        }


@dataclass
class PairedDataset:
    """In-memory training pairs with their shared subband metadata."""

    inputs: list[np.ndarray]
    targets: list[np.ndarray]
    records: tuple[SubbandRecord, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.inputs)


def _require_same(records, other, context):
    if tuple(records) != tuple(other):
        raise MetadataError(f"subband metadata mismatch: {context}")


def load_pairs(data_dir: str | Path) -> PairedDataset:
    """Read every ``*_input.lti`` / ``*_target.lti`` pair under ``data_dir``.

    Raises MetadataError if any pair is incomplete or if shapes, subband
    enumeration, or visibility flags differ anywhere in the dataset.
    """
    data_dir = Path(data_dir)
    input_paths = sorted(data_dir.glob("*_input.lti"))
    if not input_paths:
        raise MetadataError(f"no *_input.lti files under {data_dir}")
    inputs, targets = [], []
    records: tuple[SubbandRecord, ...] | None = None
    shape = None
    for in_path in input_paths:
        target_path = in_path.with_name(in_path.name[: -len("_input.lti")] + "_target.lti")
        if not target_path.exists():
            raise MetadataError(f"missing target for {in_path.name}")
        pair = []
        for path in (in_path, target_path):
            tensor = read_tensor(path)
            if tensor.kind != KIND_COEFFS:
                raise MetadataError(f"{path.name}: expected coefficients, found {tensor.kind}")
            if records is None:
                records, shape = tensor.records, tensor.data.shape
            _require_same(tensor.records, records, path.name)
            if tensor.data.shape != shape:
                raise MetadataError(
                    f"{path.name}: shape {tensor.data.shape} != {shape}"
                )
            pair.append(tensor.data)
        inputs.append(pair[0])
        targets.append(pair[1])
    return PairedDataset(inputs=inputs, targets=targets, records=records)


def channel_weights(
    records: tuple[SubbandRecord, ...],
    scale_weights: tuple[float, ...] | None = None,
    lowpass_weight: float = 0.0,
) -> np.ndarray:
    """Per-subband loss weights: zero on visible subbands, the per-scale
    weight elsewhere.  The default schedule is 3^(s+1)/400 per scale."""
    directional = [r.scale for r in records if r.cone != 0]
    n_scales = (max(directional) + 1) if directional else 0
    if scale_weights is None:
        scale_weights = tuple(3.0 ** (s + 1) / 400.0 for s in range(n_scales))
    if len(scale_weights) < n_scales:
        raise MetadataError(
            f"{len(scale_weights)} scale weights for {n_scales} scales"
        )
    out = np.zeros(len(records))
    for i, record in enumerate(records):
        if record.visible:
            continue
        out[i] = lowpass_weight if record.cone == 0 else scale_weights[record.scale]
    return out


def masked_loss(
    prediction: torch.Tensor, target: torch.Tensor, weights: torch.Tensor
) -> torch.Tensor:
    """Weighted squared error, averaged over every tensor entry; ``weights``
    has one entry per channel and is zero wherever the subband is visible."""
    w = weights.view(1, -1, 1, 1)
    return (w * (prediction - target) ** 2).mean()


def save_checkpoint(
    path: str | Path,
    model: TdbUnet,
    records: tuple[SubbandRecord, ...],
    train_config: TrainConfig,
    loss_history: list[float],
    state_dict: dict | None = None,
) -> None:
    torch.save(
        {
            "version": CHECKPOINT_VERSION,
            "state_dict": state_dict if state_dict is not None else model.state_dict(),
            "net_config": model.config.to_dict(),
            "records": [(r.scale, r.shear, r.cone, int(r.visible)) for r in records],
            "ordering_hash": ordering_hash(records),
            "train_config": train_config.to_dict(),
            "loss_history": list(loss_history),
        },
        path,
    )


def load_checkpoint(path: str | Path) -> tuple[TdbUnet, tuple[SubbandRecord, ...], dict]:
    """Rebuild the model from a checkpoint; returns (model, records, payload)."""
    payload = torch.load(path, map_location="cpu", weights_only=True)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise MetadataError(f"{path}: unsupported checkpoint version")
    model = TdbUnet(NetConfig.from_dict(payload["net_config"]))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    records = tuple(
        SubbandRecord(scale, shear, cone, bool(visible))
        for scale, shear, cone, visible in payload["records"]
    )
    if ordering_hash(records) != payload["ordering_hash"]:
        raise MetadataError(f"{path}: checkpoint ordering hash does not match its records")
    return model, records, payload


def _sample_patch(rng: np.random.Generator, h: int, w: int, patch: int) -> tuple[int, int]:
    top = int(rng.integers(0, h - patch + 1))
    left = int(rng.integers(0, w - patch + 1))
    return top, left


def train(
    dataset: PairedDataset,
    net_config: NetConfig | None,
    cfg: TrainConfig,
    out_path: str | Path,
) -> tuple[TdbUnet, list[float]]:
    """Fit the network and write a checkpoint to ``out_path``.

    One epoch visits every pair once in random order, sampling a fresh random
    patch per visit.  The checkpoint embeds weights, architecture, subband
    records, and the ordering hash; if the loss turns non-finite the last
    finite state is written before TrainingDivergedError is raised.
    """
    if not dataset.inputs:
        raise MetadataError("empty dataset")
    h, w, s = dataset.inputs[0].shape
    if cfg.patch_size > min(h, w):
        raise MetadataError(
            f"patch size {cfg.patch_size} exceeds image size {min(h, w)}"
        )
    if net_config is None:
        net_config = NetConfig.mini(s)
    if net_config.channels != s:
        raise MetadataError(
            f"network expects {net_config.channels} subbands, dataset has {s}"
        )
    weights = channel_weights(dataset.records, cfg.scale_weights, cfg.lowpass_weight)

    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    model = TdbUnet(net_config)
    model.train()
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    weight_tensor = torch.from_numpy(weights).to(torch.float32)

    # Channel-major float32 copies so patch slicing feeds torch directly.
    inputs = [np.ascontiguousarray(np.moveaxis(x, 2, 0)) for x in dataset.inputs]
    targets = [np.ascontiguousarray(np.moveaxis(x, 2, 0)) for x in dataset.targets]

    loss_history: list[float] = []
    last_good = copy.deepcopy(model.state_dict())
    step = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(inputs))
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            xs, ys = [], []
            for index in batch:
                top, left = _sample_patch(rng, h, w, cfg.patch_size)
                window = (slice(None), slice(top, top + cfg.patch_size),
                          slice(left, left + cfg.patch_size))
                xs.append(torch.from_numpy(inputs[index][window]))
                ys.append(torch.from_numpy(targets[index][window]))
            x = torch.stack(xs)
            y = torch.stack(ys)
            loss = masked_loss(model(x), y, weight_tensor)
            if not torch.isfinite(loss):
                save_checkpoint(out_path, model, dataset.records, cfg,
                                loss_history, state_dict=last_good)
                raise TrainingDivergedError(
                    f"non-finite loss at step {step}; last finite state saved to {out_path}"
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            loss_history.append(float(loss.detach()))
            last_good = copy.deepcopy(model.state_dict())
            logger.info("epoch %d step %d loss %.6e", epoch, step, loss_history[-1])
            step += 1
    model.eval()
    save_checkpoint(out_path, model, dataset.records, cfg, loss_history)
    return model, loss_history

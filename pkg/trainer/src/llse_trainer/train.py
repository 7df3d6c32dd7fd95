"""Training loop: implicit-mask MSE at full spectral resolution.

The network predicts a 66-value mask; the loss compares mask-expanded
|S_hat| = G * |X| against the reference |S| over all 513 bins, so the
network optimizes the same quantity the engine applies.  Adam with default
parameters; early stopping when validation loss has not improved for
`patience` consecutive epochs; the best-validation weights are exported.
"""

from __future__ import annotations

import copy
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from . import features
from .data import SpectrogramSet, load_training_set
from .export import export_model
from .models import make_model


@dataclass
class TrainConfig:
    manifest: str
    model_kind: str = "gru"
    export_path: str = "weights.nmwf"
    max_epochs: int = 80
    patience: int = 20
    batch_size: int = 8
    seed: int = 0
    val_fraction: float = 0.33
    log_path: str | None = None

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if self.model_kind not in ("gru", "unet"):
            raise ValueError(f"unknown model kind {self.model_kind!r}")


def _expanded_loss(masks: torch.Tensor, mix_mag: torch.Tensor,
                   ref_mag: torch.Tensor,
                   widths: torch.Tensor) -> torch.Tensor:
    gains = torch.repeat_interleave(masks, widths, dim=-1)   # 66 -> 513
    return torch.mean((gains * mix_mag - ref_mag) ** 2)


def _epoch_pass(model, loader, widths, optimizer=None):
    total = 0.0
    count = 0
    for feats, mix_mag, ref_mag in loader:
        masks = model(feats)
        loss = _expanded_loss(masks, mix_mag, ref_mag, widths)
        if optimizer is not None:
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
        total += float(loss.detach()) * len(feats)
        count += len(feats)
    return total / count


def _batches(tensors, batch_size, generator=None):
    n = len(tensors[0])
    order = (torch.randperm(n, generator=generator) if generator is not None
             else torch.arange(n))
    for start in range(0, n, batch_size):
        idx = order[start:start + batch_size]
        yield tuple(t[idx] for t in tensors)


def all_ones_mask_mse(dataset: SpectrogramSet) -> float:
    """Baseline: leave the mixture untouched (mask of ones everywhere)."""
    return float(np.mean((dataset.mix_mag - dataset.ref_mag) ** 2))


def train(config: TrainConfig) -> dict:
    torch.manual_seed(config.seed)
    torch.set_num_threads(max(1, torch.get_num_threads()))
    dataset = load_training_set(config.manifest)
    n_items = len(dataset.feats)
    n_val = max(1, int(round(config.val_fraction * n_items)))
    if n_items - n_val < 1:
        raise ValueError("not enough items for a train/validation split")
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(n_items)
    val_idx, train_idx = order[:n_val], order[n_val:]

    def tensors(idx):
        return (torch.tensor(dataset.feats[idx], dtype=torch.float32),
                torch.tensor(dataset.mix_mag[idx], dtype=torch.float32),
                torch.tensor(dataset.ref_mag[idx], dtype=torch.float32))

    train_t = tensors(train_idx)
    val_t = tensors(val_idx)
    widths = torch.tensor(features.expand_widths())

    model = make_model(config.model_kind)
    optimizer = torch.optim.Adam(model.parameters())   # default learning rate
    gen = torch.Generator().manual_seed(config.seed)

    best_val = float("inf")
    best_state = copy.deepcopy(model.state_dict())
    stall = 0
    log_rows = []
    start = time.perf_counter()
    for epoch in range(1, config.max_epochs + 1):
        model.train()
        train_loss = _epoch_pass(model,
                                 _batches(train_t, config.batch_size, gen),
                                 widths, optimizer)
        model.eval()
        with torch.no_grad():
            val_loss = _epoch_pass(model, _batches(val_t, config.batch_size),
                                   widths)
        row = {"epoch": epoch, "train_loss": train_loss,
               "val_loss": val_loss}
        log_rows.append(row)
        if val_loss < best_val:
            best_val = val_loss
            best_state = copy.deepcopy(model.state_dict())
            stall = 0
        else:
            stall += 1
            if stall >= config.patience:
                break
    model.load_state_dict(best_state)
    export_model(model, config.export_path)
    summary = {
        "model_kind": config.model_kind,
        "epochs_run": len(log_rows),
        "best_val_loss": best_val,
        "ones_mask_mse": all_ones_mask_mse(dataset),
        "train_items": int(len(train_idx)),
        "val_items": int(len(val_idx)),
        "seconds": time.perf_counter() - start,
        "export_path": str(config.export_path),
    }
    if config.log_path:
        with open(config.log_path, "w", encoding="utf-8") as fh:
            for row in log_rows:
                fh.write(json.dumps(row) + "\n")
            fh.write(json.dumps({"summary": summary}) + "\n")
    return {"summary": summary, "log": log_rows, "model": model}

from __future__ import annotations

import copy
import csv
import logging
import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from agentfp.classifier.model import Model, _as_tensor
from agentfp.errors import DivergenceError
from agentfp.validation import check_probability

log = logging.getLogger(__name__)

OPTIMIZERS = ("adam", "sgd_momentum")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    validation_fraction: float = 0.1
    # stop after this many epochs without validation-loss improvement; None disables
    patience: int | None = 5
    momentum: float = 0.9
    loss: str = "cross_entropy"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if self.loss != "cross_entropy":
            raise ValueError("only cross_entropy loss is supported")
        check_probability(self.validation_fraction, "validation_fraction", open_low=False)


def stratified_holdout(y: np.ndarray, fraction: float, rng: np.random.Generator):
    """Split indices into (train, held-out), taking ``fraction`` of each class."""
    train, held = [], []
    for cls in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == cls))
        k = int(math.floor(fraction * len(idx)))
        held.extend(idx[:k])
        train.extend(idx[k:])
    return np.sort(np.array(train, dtype=np.int64)), np.sort(np.array(held, dtype=np.int64))


def _make_optimizer(params, cfg: TrainConfig):
    if cfg.optimizer == "adam":
        return torch.optim.Adam(params, lr=cfg.learning_rate)
    return torch.optim.SGD(params, lr=cfg.learning_rate, momentum=cfg.momentum)


def _evaluate(net, x, y, loss_fn, batch_size=256):
    net.eval()
    total, correct = 0.0, 0
    with torch.no_grad():
        for s in range(0, len(x), batch_size):
            logits = net(x[s:s + batch_size])
            total += loss_fn(logits, y[s:s + batch_size]).item() * len(logits)
            correct += (logits.argmax(1) == y[s:s + batch_size]).sum().item()
    return total / len(x), correct / len(x)


def train(model: Model, X, y, cfg: TrainConfig = TrainConfig(), *, X_val=None, y_val=None):
    """Fit ``model`` in place with mini-batch cross-entropy.

    ``y`` holds labels from ``model.label_map``.  Without an explicit validation
    set, ``cfg.validation_fraction`` of each class is held out.  When a
    validation set exists and ``cfg.patience`` is set, training stops early and
    the weights with the lowest validation loss are restored.

    Returns ``(model, history)`` with one dict per epoch
    (epoch, loss, train_acc, val_loss, val_acc).
    """
    y_idx = model.index_of(y)
    if len(np.unique(y_idx)) < 2:
        raise ValueError("training needs at least 2 classes")
    rng = np.random.default_rng(cfg.seed)
    torch.manual_seed(cfg.seed)

    x_all = _as_tensor(model, X)
    if X_val is None:
        tr, va = stratified_holdout(y_idx, cfg.validation_fraction, rng)
        x_tr, y_tr = x_all[tr], torch.from_numpy(y_idx[tr])
        x_va, y_va = x_all[va], torch.from_numpy(y_idx[va])
    else:
        x_tr, y_tr = x_all, torch.from_numpy(y_idx)
        x_va, y_va = _as_tensor(model, X_val), torch.from_numpy(model.index_of(y_val))
    has_val = len(x_va) > 0

    net = model.net
    # channels-last is markedly faster for the 2-D convolutions on CPU
    net.to(memory_format=torch.channels_last)
    x_tr = x_tr.contiguous(memory_format=torch.channels_last)
    opt = _make_optimizer(net.parameters(), cfg)
    loss_fn = nn.CrossEntropyLoss()
    history = []
    best_loss, best_state, stale = math.inf, None, 0

    for epoch in range(1, cfg.epochs + 1):
        net.train()
        order = torch.from_numpy(rng.permutation(len(x_tr)))
        total, correct, seen = 0.0, 0, 0
        for s in range(0, len(order), cfg.batch_size):
            batch = order[s:s + cfg.batch_size]
            if len(batch) < 2 and len(order) > 1:
                continue  # batch norm needs more than one sample
            logits = net(x_tr[batch])
            loss = loss_fn(logits, y_tr[batch])
            if not torch.isfinite(loss):
                raise DivergenceError(f"loss became non-finite at epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * len(batch)
            correct += (logits.argmax(1) == y_tr[batch]).sum().item()
            seen += len(batch)
        row = {"epoch": epoch, "loss": total / seen, "train_acc": correct / seen,
               "val_loss": math.nan, "val_acc": math.nan}
        if has_val:
            row["val_loss"], row["val_acc"] = _evaluate(net, x_va, y_va, loss_fn)
            if not math.isfinite(row["val_loss"]):
                raise DivergenceError(f"validation loss became non-finite at epoch {epoch}")
        history.append(row)
        log.info("epoch %d loss %.4f train_acc %.3f val_acc %.3f",
                 epoch, row["loss"], row["train_acc"], row["val_acc"])

        if has_val and cfg.patience is not None:
            if row["val_loss"] < best_loss:
                best_loss, best_state, stale = row["val_loss"], copy.deepcopy(net.state_dict()), 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    break
    if best_state is not None:
        net.load_state_dict(best_state)
    net.to(memory_format=torch.contiguous_format)
    net.eval()
    return model, history


def write_history(history, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss", "train_acc", "val_acc"])
        for row in history:
            w.writerow([row["epoch"], repr(row["loss"]), repr(row["train_acc"]), repr(row["val_acc"])])

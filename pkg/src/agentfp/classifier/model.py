"""The MTAM network, model container, forward pass and prediction rule."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from agentfp.classifier.arch import ArchConfig
from agentfp.validation import check_mtam_array

UNMONITORED = "unmonitored"
INPUT_LAYOUT = "channels=[count,bytes] height=[in,out] width=windows"

# even kernels with padding="same" pad asymmetrically; torch warns on every call
warnings.filterwarnings("ignore", message="Using padding='same' with even kernel", category=UserWarning)


def _conv_block2d(cin, b):
    return nn.Sequential(
        nn.Conv2d(cin, b.filters, b.kernel, padding="same"),
        nn.ReLU(),
        nn.BatchNorm2d(b.filters),
        nn.Conv2d(b.filters, b.filters, b.kernel, padding="same"),
        nn.ReLU(),
        nn.BatchNorm2d(b.filters),
        nn.MaxPool2d(b.pool, ceil_mode=True),
        nn.Dropout(b.dropout),
    )


def _conv_block1d(cin, b):
    return nn.Sequential(
        nn.Conv1d(cin, b.filters, b.kernel, padding="same"),
        nn.ReLU(),
        nn.BatchNorm1d(b.filters),
        nn.Conv1d(b.filters, b.filters, b.kernel, padding="same"),
        nn.ReLU(),
        nn.BatchNorm1d(b.filters),
        nn.MaxPool1d(b.pool, ceil_mode=True),
        nn.Dropout(b.dropout),
    )


class MtamNet(nn.Module):
    def __init__(self, arch: ArchConfig):
        super().__init__()
        ch = arch.in_channels
        blocks = []
        for b in arch.blocks2d:
            blocks.append(_conv_block2d(ch, b))
            ch = b.filters
        self.blocks2d = nn.Sequential(*blocks)
        self.reduce = nn.Conv1d(ch, arch.reduce_channels, 1)
        ch = arch.reduce_channels
        blocks = []
        for b in arch.blocks1d:
            blocks.append(_conv_block1d(ch, b))
            ch = b.filters
        self.blocks1d = nn.Sequential(*blocks)
        self.classify = nn.Conv1d(ch, arch.num_classes, 1)

    def features(self, x):
        """Final 1D feature map, shape (n, channels, length)."""
        x = self.blocks2d(x)
        x = x.squeeze(2)  # height is 1 after the 2D pools
        x = self.reduce(x)
        return self.blocks1d(x)

    def forward(self, x, return_embedding=False):
        h = self.features(x)
        logits = self.classify(h).mean(dim=2)  # global average pooling
        if return_embedding:
            return logits, h.mean(dim=2)
        return logits


def init_weights(net: nn.Module, seed: int) -> None:
    """Fan-in scaled uniform kernels, zero biases, identity batch norm."""
    gen = torch.Generator().manual_seed(int(seed))
    with torch.no_grad():
        for module in net.modules():
            if isinstance(module, (nn.Conv1d, nn.Conv2d)):
                w = module.weight
                fan_in = w[0].numel()
                bound = math.sqrt(6.0 / fan_in)
                w.copy_(torch.rand(w.shape, generator=gen, dtype=w.dtype) * 2 * bound - bound)
                module.bias.zero_()
            elif isinstance(module, (nn.BatchNorm1d, nn.BatchNorm2d)):
                module.reset_parameters()


@dataclass
class Model:
    arch: ArchConfig
    net: MtamNet
    label_map: list
    trained_on: str = ""
    normalization: str = "none"

    def __post_init__(self):
        if len(self.label_map) != self.arch.num_classes or len(set(self.label_map)) != len(self.label_map):
            raise ValueError("label_map must list num_classes distinct labels")

    @property
    def num_classes(self) -> int:
        return self.arch.num_classes

    def index_of(self, labels) -> np.ndarray:
        lookup = {lab: i for i, lab in enumerate(self.label_map)}
        try:
            return np.array([lookup[lab] for lab in labels], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"label {exc.args[0]!r} is not in the model's label map") from exc


@dataclass
class Prediction:
    probs: np.ndarray
    label: str
    index: int
    embedding: np.ndarray | None = None


def build_model(arch: ArchConfig, seed: int = 0, label_map=None) -> Model:
    net = MtamNet(arch)
    init_weights(net, seed)
    net.eval()
    if label_map is None:
        label_map = [str(i) for i in range(arch.num_classes)]
    return Model(arch, net, list(label_map))


def _as_tensor(model: Model, X) -> torch.Tensor:
    dtype = next(model.net.parameters()).dtype
    X = check_mtam_array(X, model.arch.W, np.float64 if dtype == torch.float64 else np.float32)
    return torch.from_numpy(X)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(model: Model, X, train_mode: bool = False, *, batch_size: int = 256,
            return_embedding: bool = False):
    """Class probabilities for a batch of MTAMs (and optionally embeddings).

    Probabilities are computed in float64 from the network's logits.
    """
    x = _as_tensor(model, X)
    model.net.train(train_mode)
    logits, embs = [], []
    with torch.no_grad():
        for start in range(0, len(x), batch_size):
            lg, emb = model.net(x[start:start + batch_size], return_embedding=True)
            logits.append(lg.double().numpy())
            embs.append(emb.double().numpy())
    model.net.eval()
    if logits:
        probs = softmax(np.concatenate(logits))
        emb = np.concatenate(embs)
    else:
        probs = np.zeros((0, model.num_classes))
        emb = np.zeros((0, model.arch.embedding_dim))
    return (probs, emb) if return_embedding else probs


def decide(probs: np.ndarray, label_map, threshold: float | None = None) -> tuple[np.ndarray, list]:
    """Argmax (lowest index on ties); below ``threshold`` the label is ``"unmonitored"``."""
    probs = np.atleast_2d(probs)
    idx = probs.argmax(axis=1)
    labels = [label_map[i] for i in idx]
    if threshold is not None:
        top = probs[np.arange(len(probs)), idx]
        labels = [UNMONITORED if p < threshold else lab for p, lab in zip(top, labels)]
    return idx, labels


def predict(model: Model, X, open_world_threshold: float | None = None) -> list[Prediction]:
    probs, emb = forward(model, X, return_embedding=True)
    idx, labels = decide(probs, model.label_map, open_world_threshold)
    return [Prediction(p, lab, int(i), e) for p, lab, i, e in zip(probs, labels, idx, emb)]


def tune_threshold(max_probs_known, max_probs_unknown=None, target_recall: float = 0.95) -> float:
    """Pick an open-world rejection threshold from validation confidences.

    With unmonitored validation samples, the threshold maximises balanced
    accuracy between accepting known and rejecting unknown samples; without
    them it keeps ``target_recall`` of the monitored samples.
    """
    known = np.sort(np.asarray(max_probs_known, dtype=np.float64))
    if max_probs_unknown is None or len(max_probs_unknown) == 0:
        k = int(np.floor((1 - target_recall) * len(known)))
        return float(known[min(k, len(known) - 1)])
    unknown = np.asarray(max_probs_unknown, dtype=np.float64)
    candidates = np.unique(np.concatenate([known, unknown]))
    best, best_t = -1.0, float(candidates[0])
    for t in candidates:
        score = (known >= t).mean() + (unknown < t).mean()
        if score > best:
            best, best_t = score, float(t)
    return best_t

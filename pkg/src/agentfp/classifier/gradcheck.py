"""Backpropagation check against central finite differences."""

from __future__ import annotations

import copy

import numpy as np
import torch
from torch import nn

from agentfp.classifier.model import Model


def _loss(net, x, y):
    return nn.functional.cross_entropy(net(x), y)


def gradient_check(model: Model, X, y, eps: float = 1e-5, n_per_layer: int = 100, seed: int = 0,
                   return_details: bool = False):
    """Largest relative error between autograd and central differences.

    Runs on a float64 copy in eval mode (dropout off, batch norm frozen) so the
    loss is a deterministic function of the weights.  For every parameter tensor
    up to ``n_per_layer`` entries are sampled; the relative error of one entry is
    ``|g - fd| / max(|g| + |fd|, 1e-10)``.
    """
    net = copy.deepcopy(model.net).double().eval()
    x = torch.as_tensor(np.asarray(X, dtype=np.float64)).reshape(-1, 2, 2, model.arch.W)
    y = np.atleast_1d(np.asarray(y))
    target = torch.as_tensor(y.astype(np.int64) if y.dtype.kind in "iu" else model.index_of(y))
    net.zero_grad()
    _loss(net, x, target).backward()

    rng = np.random.default_rng(seed)
    details = {}
    worst = 0.0
    with torch.no_grad():
        for name, p in net.named_parameters():
            flat = p.view(-1)
            grad = p.grad.view(-1).clone()
            picks = rng.choice(flat.numel(), size=min(n_per_layer, flat.numel()), replace=False)
            errs = []
            for k in picks:
                orig = flat[k].item()
                flat[k] = orig + eps
                up = _loss(net, x, target).item()
                flat[k] = orig - eps
                down = _loss(net, x, target).item()
                flat[k] = orig
                fd = (up - down) / (2 * eps)
                g = grad[k].item()
                errs.append(abs(g - fd) / max(abs(g) + abs(fd), 1e-10))
            details[name] = max(errs)
            worst = max(worst, details[name])
    return (worst, details) if return_details else worst

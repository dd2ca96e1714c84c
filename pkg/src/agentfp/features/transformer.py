from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from agentfp.features.mtam import MtamConfig, extract_mtam, normalize_array


class MtamTransformer(TransformerMixin, BaseEstimator):
    """Turn a list of ``Trace`` objects into an (n, 2, 2, W) float32 array.

    Stateless; ``fit`` only validates parameters so the transformer can sit in
    a ``Pipeline`` in front of ``TrafficCNNClassifier``.
    """

    def __init__(self, W=1800, mode="uniform", gap=0.05, clip_counts=None, clip_bytes=None,
                 normalize="none"):
        self.W = W
        self.mode = mode
        self.gap = gap
        self.clip_counts = clip_counts
        self.clip_bytes = clip_bytes
        self.normalize = normalize

    def _config(self) -> MtamConfig:
        return MtamConfig(self.W, self.mode, self.gap, self.clip_counts, self.clip_bytes)

    def fit(self, X, y=None):
        self.config_ = self._config()
        normalize_array(np.zeros(1), self.normalize)
        return self

    def transform(self, X):
        cfg = getattr(self, "config_", None) or self._config()
        out = np.empty((len(X), 2, 2, cfg.W), dtype=np.float32)
        for i, trace in enumerate(X):
            out[i] = extract_mtam(trace, cfg).tensor
        return normalize_array(out, self.normalize)

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.input_tags.two_d_array = False
        tags.requires_fit = False
        return tags

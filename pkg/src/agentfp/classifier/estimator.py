from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from agentfp.classifier.arch import ArchConfig, _default_blocks1d, _default_blocks2d
from agentfp.classifier.model import Model, build_model, decide, forward
from agentfp.classifier.training import TrainConfig, train
from agentfp.validation import check_mtam_array


class TrafficCNNClassifier(ClassifierMixin, BaseEstimator):
    """Dual-channel CNN over MTAMs with optional open-world rejection.

    X is shaped (n, 2, 2, W) or (n, 4, W); labels are arbitrary strings.
    With ``open_world_threshold`` set, ``predict`` returns ``"unmonitored"``
    for samples whose top probability falls below it.

    Parameters mirror ``ArchConfig`` and ``TrainConfig``; ``None`` block lists
    select the default layer plan.
    """

    def __init__(self, blocks2d=None, blocks1d=None, reduce_channels=32, epochs=100,
                 batch_size=32, learning_rate=1e-3, optimizer="adam", validation_fraction=0.1,
                 patience=5, open_world_threshold=None, normalization="none", random_state=0):
        self.blocks2d = blocks2d
        self.blocks1d = blocks1d
        self.reduce_channels = reduce_channels
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.validation_fraction = validation_fraction
        self.patience = patience
        self.open_world_threshold = open_world_threshold
        self.normalization = normalization
        self.random_state = random_state

    def _arch(self, W, num_classes):
        return ArchConfig(
            W=W,
            num_classes=num_classes,
            blocks2d=self.blocks2d if self.blocks2d is not None else _default_blocks2d(),
            reduce_channels=self.reduce_channels,
            blocks1d=self.blocks1d if self.blocks1d is not None else _default_blocks1d(),
        )

    def _train_config(self):
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            optimizer=self.optimizer,
            seed=self.random_state,
            validation_fraction=self.validation_fraction,
            patience=self.patience,
        )

    def fit(self, X, y, X_val=None, y_val=None, trained_on=""):
        X = check_mtam_array(X)
        y = np.asarray(y).astype(str)
        if len(X) != len(y):
            raise ValueError(f"X has {len(X)} samples but y has {len(y)}")
        self.classes_ = np.unique(y)
        arch = self._arch(X.shape[3], len(self.classes_))
        model = build_model(arch, seed=self.random_state, label_map=list(self.classes_))
        model.trained_on = trained_on
        model.normalization = self.normalization
        if X_val is not None:
            y_val = np.asarray(y_val).astype(str)
        self.model_, self.history_ = train(model, X, y, self._train_config(), X_val=X_val, y_val=y_val)
        self.n_features_in_ = X.shape[3]
        return self

    @classmethod
    def from_model(cls, model: Model, **params):
        est = cls(normalization=model.normalization, **params)
        est.model_ = model
        est.classes_ = np.asarray(model.label_map)
        est.history_ = []
        est.n_features_in_ = model.arch.W
        return est

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        return forward(self.model_, check_mtam_array(X, self.model_.arch.W))

    def predict(self, X, open_world_threshold=None):
        threshold = open_world_threshold if open_world_threshold is not None else self.open_world_threshold
        _, labels = decide(self.predict_proba(X), self.classes_, threshold)
        return np.asarray(labels, dtype=object)

    def embed(self, X):
        """Penultimate features (global average of the last 1D block)."""
        check_is_fitted(self, "model_")
        _, emb = forward(self.model_, check_mtam_array(X, self.model_.arch.W), return_embedding=True)
        return emb

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.input_tags.two_d_array = False
        tags.non_deterministic = False
        return tags

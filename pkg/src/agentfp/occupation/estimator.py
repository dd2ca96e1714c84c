from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from agentfp.occupation.profiling import CLAMP_EPS, correlate, infer_occupation, score_rank_matrix
from agentfp.validation import check_probability


class OccupationProfiler(BaseEstimator):
    """Zero-shot occupation-category inference from ranked agent usage.

    ``fit`` probes each agent profile against the partitioned ``network`` and
    stores the log comparative-advantage matrix as ``rmatrix_``.  ``predict``
    takes rank lists (most used agent first) and returns community labels.
    """

    def __init__(self, network=None, alpha=0.5, eps=CLAMP_EPS):
        self.network = network
        self.alpha = alpha
        self.eps = eps

    def fit(self, agents, y=None):
        if self.network is None:
            raise ValueError("OccupationProfiler needs a partitioned occupation network")
        check_probability(self.alpha, "alpha")
        self.rmatrix_ = correlate(self.network, list(agents), self.eps)
        self.classes_ = np.asarray(self.rmatrix_.communities, dtype=object)
        return self

    @classmethod
    def from_rmatrix(cls, rmatrix, alpha=0.5):
        est = cls(alpha=alpha)
        est.rmatrix_ = rmatrix
        est.classes_ = np.asarray(rmatrix.communities, dtype=object)
        return est

    def decision_function(self, rank_lists):
        check_is_fitted(self, "rmatrix_")
        rank_lists = [list(r) for r in rank_lists]
        if len({len(r) for r in rank_lists}) == 1:
            return score_rank_matrix(self.rmatrix_, rank_lists, self.alpha)
        return np.stack([infer_occupation(self.rmatrix_, r, self.alpha)[0] for r in rank_lists])

    def rank(self, rank_lists, k=None):
        """Community indices per user, best first (ties to the lower index)."""
        scores = self.decision_function(rank_lists)
        order = np.argsort(-scores, axis=1, kind="stable")
        return order if k is None else order[:, :k]

    def predict(self, rank_lists):
        return self.classes_[self.rank(rank_lists, 1)[:, 0]]

    def topk_accuracy(self, rank_lists, truths, k=3):
        truths = np.asarray(truths, dtype=object)
        top = self.classes_[self.rank(rank_lists, k)]
        return float(np.mean([t in row for t, row in zip(truths, top)]))

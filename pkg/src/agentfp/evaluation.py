"""Splits, repeated-split evaluation and classification reports."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from agentfp.errors import InsufficientSamples, LengthMismatch, ValidationError

TOP_K = (1, 2, 3)
MIN_PER_CLASS = 10


def parse_ratios(ratios) -> tuple:
    if isinstance(ratios, str):
        try:
            ratios = tuple(float(r) for r in ratios.split(":"))
        except ValueError as exc:
            raise ValidationError(f"bad split ratios {ratios!r}") from exc
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios) or ratios[0] <= 0 or sum(ratios) <= 0:
        raise ValidationError(f"split ratios must be three non-negative numbers with train > 0, got {ratios}")
    return ratios


def split_dataset(labels, ratios="8:1:1", seed=0):
    """Stratified train/val/test index arrays.

    Per class of size n, val and test get floor(n * share) samples each and
    train keeps the rest, so 100 samples split 80/10/10 exactly.
    """
    ratios = parse_ratios(ratios)
    labels = np.asarray(labels, dtype=object)
    total = sum(ratios)
    rng = np.random.default_rng(seed)
    parts = ([], [], [])
    for c in sorted(set(labels.tolist())):
        idx = np.flatnonzero(labels == c)
        if len(idx) < MIN_PER_CLASS:
            raise InsufficientSamples(f"class {c!r} has {len(idx)} samples, need >= {MIN_PER_CLASS}")
        idx = rng.permutation(idx)
        n_val = int(math.floor(len(idx) * ratios[1] / total + 1e-9))
        n_test = int(math.floor(len(idx) * ratios[2] / total + 1e-9))
        n_train = len(idx) - n_val - n_test
        parts[0].append(idx[:n_train])
        parts[1].append(idx[n_train:n_train + n_val])
        parts[2].append(idx[n_train + n_val:])
    return tuple(np.sort(np.concatenate(p)) for p in parts)


@dataclass
class EvalReport:
    classes: list
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    macro_f1: float
    accuracy: float
    confusion: np.ndarray  # rows: truth, columns: prediction
    topk: dict = field(default_factory=dict)
    folds: list = field(default_factory=list)  # one dict of scalar metrics per fold

    def fold_stats(self) -> dict:
        """Mean and sample standard deviation of each per-fold metric."""
        if not self.folds:
            return {}
        out = {}
        for key in self.folds[0]:
            if key == "fold":
                continue
            vals = np.array([f[key] for f in self.folds], dtype=np.float64)
            out[key] = (float(vals.mean()), float(vals.std(ddof=1)) if len(vals) > 1 else 0.0)
        return out

    def to_csv(self, path) -> None:
        """Long format: ``section,key,column,value`` with repr() floats."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["section", "key", "column", "value"])
            w.writerow(["summary", "macro_f1", "", repr(float(self.macro_f1))])
            w.writerow(["summary", "accuracy", "", repr(float(self.accuracy))])
            for k, v in sorted(self.topk.items()):
                w.writerow(["topk", str(k), "", repr(float(v))])
            for i, c in enumerate(self.classes):
                w.writerow(["class", c, "precision", repr(float(self.precision[i]))])
                w.writerow(["class", c, "recall", repr(float(self.recall[i]))])
                w.writerow(["class", c, "f1", repr(float(self.f1[i]))])
                w.writerow(["class", c, "support", str(int(self.support[i]))])
            for i, t in enumerate(self.classes):
                for j, p in enumerate(self.classes):
                    w.writerow(["confusion", t, p, str(int(self.confusion[i, j]))])
            for f in self.folds:
                for key, v in f.items():
                    if key != "fold":
                        w.writerow(["fold", str(f["fold"]), key, repr(float(v))])
            for key, (mean, std) in self.fold_stats().items():
                w.writerow(["fold_stats", key, "mean", repr(mean)])
                w.writerow(["fold_stats", key, "std", repr(std)])

    @classmethod
    def from_csv(cls, path) -> "EvalReport":
        summary, topk, per_class, conf, folds = {}, {}, {}, {}, {}
        classes = []
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                sec, key, col, val = row["section"], row["key"], row["column"], row["value"]
                if sec == "summary":
                    summary[key] = float(val)
                elif sec == "topk":
                    topk[int(key)] = float(val)
                elif sec == "class":
                    if key not in per_class:
                        classes.append(key)
                        per_class[key] = {}
                    per_class[key][col] = float(val)
                elif sec == "confusion":
                    conf[(key, col)] = int(val)
                elif sec == "fold":
                    folds.setdefault(int(key), {"fold": int(key)})[col] = float(val)
        k = len(classes)
        confusion = np.zeros((k, k), dtype=np.int64)
        for i, t in enumerate(classes):
            for j, p in enumerate(classes):
                confusion[i, j] = conf.get((t, p), 0)

        def col(name, dtype=np.float64):
            return np.array([per_class[c][name] for c in classes], dtype=dtype)

        return cls(classes, col("precision"), col("recall"), col("f1"), col("support", np.int64),
                   summary["macro_f1"], summary["accuracy"], confusion, topk,
                   [folds[i] for i in sorted(folds)])


def compute_metrics(predictions, truths, classes=None, probs=None, prob_classes=None) -> EvalReport:
    """Per-class precision/recall/F1, macro-F1, accuracy, confusion and top-K.

    ``classes`` fixes the label order (default: sorted union of both inputs).
    Top-K needs ``probs`` (n, C) whose columns follow ``prob_classes``
    (default ``classes``); without it only top-1 (= accuracy) is reported.
    Classes with no true samples are left out of the macro average.
    """
    predictions = [str(p) for p in predictions]
    truths = [str(t) for t in truths]
    if len(predictions) != len(truths):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(truths)} truths")
    if not truths:
        raise ValidationError("no samples to score")
    if classes is None:
        classes = sorted(set(predictions) | set(truths))
    classes = [str(c) for c in classes]
    index = {c: i for i, c in enumerate(classes)}
    unknown = (set(predictions) | set(truths)) - set(index)
    if unknown:
        raise ValidationError(f"labels not in the class map: {sorted(unknown)[:5]}")
    k = len(classes)
    t_idx = np.array([index[t] for t in truths])
    p_idx = np.array([index[p] for p in predictions])
    confusion = np.bincount(t_idx * k + p_idx, minlength=k * k).reshape(k, k)
    tp = np.diag(confusion).astype(np.float64)
    support = confusion.sum(axis=1)
    predicted = confusion.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(predicted > 0, tp / predicted, 0.0)
        recall = np.where(support > 0, tp / support, 0.0)
        f1 = np.where(precision + recall > 0, 2 * precision * recall / (precision + recall), 0.0)
    present = support > 0
    if not present.all():
        missing = [classes[i] for i in np.flatnonzero(~present)]
        warnings.warn(f"classes without true samples left out of macro-F1: {missing}", stacklevel=2)
    macro = float(f1[present].mean())
    accuracy = float(tp.sum() / len(truths))

    topk = {1: accuracy}
    if probs is not None:
        probs = np.asarray(probs, dtype=np.float64)
        pcls = [str(c) for c in (prob_classes if prob_classes is not None else classes)]
        if probs.shape != (len(truths), len(pcls)):
            raise LengthMismatch(f"probs shape {probs.shape} does not match {len(truths)} x {len(pcls)}")
        order = np.argsort(-probs, axis=1, kind="stable")
        col = {c: j for j, c in enumerate(pcls)}
        truth_col = np.array([col.get(t, -1) for t in truths])
        for K in TOP_K:
            if K <= len(pcls):
                topk[K] = float(np.mean((order[:, :K] == truth_col[:, None]).any(axis=1)))
    return EvalReport(classes, precision, recall, f1, support, macro, accuracy, confusion, topk)


def kfold_evaluate(X, y, repeats: int = 10, ratios="8:1:1", seed: int = 0, fit_predict=None,
                   estimator_params=None) -> EvalReport:
    """Repeated random stratified splits: train, early-stop on val, score on test.

    ``fit_predict(X_tr, y_tr, X_val, y_val, X_test, seed)`` must return
    ``(probs, classes)``.  The default trains a ``TrafficCNNClassifier`` built
    from ``estimator_params``.  Repeat r uses split seed ``(seed, r)`` and
    training seed ``seed + r``.  The returned report pools all test
    predictions; per-repeat metrics sit in ``folds``.
    """
    if repeats < 2:
        raise ValidationError("repeats must be >= 2")
    X = np.asarray(X)
    y = np.asarray(y, dtype=object).astype(str)
    if len(X) != len(y):
        raise LengthMismatch(f"X has {len(X)} samples, y has {len(y)}")
    if fit_predict is None:
        fit_predict = cnn_fit_predict(estimator_params or {})
    classes = sorted(set(y.tolist()))
    all_pred, all_true, all_probs, folds = [], [], [], []
    for r in range(repeats):
        tr, va, te = split_dataset(y, ratios, seed=(seed, r))
        try:
            probs, pcls = fit_predict(X[tr], y[tr], X[va], y[va], X[te], seed + r)
        except Exception as exc:
            if exc.args and isinstance(exc.args[0], str):
                exc.args = (f"fold {r}: {exc.args[0]}",) + exc.args[1:]
            raise
        probs = np.asarray(probs, dtype=np.float64)
        aligned = np.zeros((len(te), len(classes)))
        for j, c in enumerate(pcls):
            aligned[:, classes.index(str(c))] = probs[:, j]
        pred = [classes[i] for i in aligned.argmax(axis=1)]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = compute_metrics(pred, y[te], classes, aligned)
        folds.append({"fold": r, "macro_f1": rep.macro_f1, "accuracy": rep.accuracy,
                      **{f"top{k}": v for k, v in rep.topk.items()}, "n_test": float(len(te))})
        all_pred += pred
        all_true += list(y[te])
        all_probs.append(aligned)
    report = compute_metrics(all_pred, all_true, classes, np.concatenate(all_probs))
    report.folds = folds
    return report


def cnn_fit_predict(params: dict):
    """Default ``fit_predict`` for ``kfold_evaluate`` using the CNN classifier."""
    from agentfp.classifier.estimator import TrafficCNNClassifier

    def run(X_tr, y_tr, X_va, y_va, X_te, seed):
        est = TrafficCNNClassifier(**{**params, "random_state": seed})
        if len(X_va):
            est.fit(X_tr, y_tr, X_val=X_va, y_val=y_va)
        else:
            est.fit(X_tr, y_tr)
        return est.predict_proba(X_te), list(est.classes_)

    return run

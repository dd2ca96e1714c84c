"""Windowed packet-count / byte-volume matrices.

Each trace becomes a 4 x W array with rows ``[N_in, N_out, B_in, B_out]``:
packets and bytes per time window, split by direction.  ``MTAM.tensor``
presents the same data as (metric, direction, window) = (2, 2, W).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from agentfp.errors import ConfigError, EmptyTrace
from agentfp.ingest.traces import Trace

ROWS = ("N_in", "N_out", "B_in", "B_out")
MODES = ("uniform", "fixed_gap")
SCHEMES = ("none", "log1p")


@dataclass(frozen=True)
class MtamConfig:
    W: int = 1800
    mode: str = "uniform"
    gap: float = 0.05
    clip_counts: float | None = None
    clip_bytes: float | None = None

    def __post_init__(self):
        if not isinstance(self.W, (int, np.integer)) or self.W < 1:
            raise ConfigError(f"W must be a positive integer, got {self.W!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "fixed_gap" and not self.gap > 0:
            raise ConfigError(f"gap must be > 0 in fixed_gap mode, got {self.gap!r}")
        for name in ("clip_counts", "clip_bytes"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ConfigError(f"{name} must be non-negative")

    @property
    def max_duration(self) -> float:
        return self.W * self.gap

    def to_dict(self) -> dict:
        d = asdict(self)
        d["W"] = int(d["W"])
        if self.mode == "uniform":
            d["gap"] = None
        return d

    @property
    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class MTAM:
    values: np.ndarray
    source_trace_id: str = ""
    config_hash: str = ""
    dropped: int = 0
    scheme: str = "none"
    label: str | None = field(default=None, compare=False)

    @property
    def W(self) -> int:
        return self.values.shape[1]

    @property
    def tensor(self) -> np.ndarray:
        """View as (metric, direction, window) with metric [count, bytes], direction [in, out]."""
        return self.values.reshape(2, 2, -1)

    def row(self, name: str) -> np.ndarray:
        return self.values[ROWS.index(name)]

    def __eq__(self, other):
        if not isinstance(other, MTAM):
            return NotImplemented
        return (
            self.source_trace_id == other.source_trace_id
            and self.config_hash == other.config_hash
            and self.dropped == other.dropped
            and self.scheme == other.scheme
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


def window_edges(duration: float, cfg: MtamConfig) -> np.ndarray:
    """Left edges j * width for j = 0..W (the last entry is the right end)."""
    width = cfg.gap if cfg.mode == "fixed_gap" else duration / cfg.W
    return np.arange(cfg.W + 1, dtype=np.float64) * width


def window_index(times: np.ndarray, duration: float, cfg: MtamConfig) -> np.ndarray:
    """Window of each packet; -1 marks packets dropped past ``W * gap``.

    A packet on an edge belongs to the window on its right.  In uniform mode
    the final window is closed so ``t = duration`` lands in window W-1, and a
    zero-duration trace puts everything in window 0.
    """
    if cfg.mode == "uniform" and duration == 0:
        return np.zeros(len(times), dtype=np.int64)
    edges = window_edges(duration, cfg)
    idx = np.searchsorted(edges, times, side="right") - 1
    if cfg.mode == "uniform":
        return np.minimum(idx, cfg.W - 1)
    idx[idx >= cfg.W] = -1
    return idx


def extract_mtam(trace: Trace, cfg: MtamConfig | None = None) -> MTAM:
    cfg = cfg or MtamConfig()
    n = len(trace.packets)
    if n == 0 and cfg.mode == "uniform":
        raise EmptyTrace(f"trace {trace.trace_id!r} has no packets")

    values = np.zeros((4, cfg.W), dtype=np.float64)
    dropped = 0
    if n:
        idx = window_index(trace.times, trace.duration, cfg)
        keep = idx >= 0
        dropped = int(n - keep.sum())
        idx = idx[keep]
        outgoing = trace.directions[keep] > 0
        sizes = trace.sizes[keep]
        for d_row, mask in ((0, ~outgoing), (1, outgoing)):
            values[d_row] = np.bincount(idx[mask], minlength=cfg.W)
            # integer byte sums stay exact in float64 below 2**53
            values[d_row + 2] = np.bincount(idx[mask], weights=sizes[mask].astype(np.float64), minlength=cfg.W)

    if cfg.clip_counts is not None:
        np.minimum(values[:2], cfg.clip_counts, out=values[:2])
    if cfg.clip_bytes is not None:
        np.minimum(values[2:], cfg.clip_bytes, out=values[2:])
    return MTAM(values, trace.trace_id, cfg.digest, dropped, "none", trace.label)


def normalize(mtam: MTAM, scheme: str = "none") -> MTAM:
    if scheme not in SCHEMES:
        raise ConfigError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    if scheme == "none":
        return mtam
    return MTAM(np.log1p(mtam.values), mtam.source_trace_id, mtam.config_hash,
                mtam.dropped, scheme, mtam.label)


def normalize_array(X: np.ndarray, scheme: str) -> np.ndarray:
    if scheme not in SCHEMES:
        raise ConfigError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    return np.log1p(X) if scheme == "log1p" else X


@dataclass
class ExtractionError:
    index: int
    trace_id: str
    error: Exception

    def __str__(self):
        return f"{self.trace_id} (#{self.index}): {type(self.error).__name__}: {self.error}"


def batch_extract(traces: Sequence[Trace], cfg: MtamConfig | None = None, scheme: str = "none"):
    """Extract every trace; failures are collected instead of raised.

    Returns ``(dataset, errors)`` where ``dataset`` is an ``MtamDataset`` holding
    the successful extractions in input order.
    """
    from agentfp.features.dataset import MtamDataset

    cfg = cfg or MtamConfig()
    mtams, errors = [], []
    for i, trace in enumerate(traces):
        try:
            mtams.append(normalize(extract_mtam(trace, cfg), scheme))
        except (EmptyTrace, ValueError) as exc:
            errors.append(ExtractionError(i, trace.trace_id, exc))
    X = np.stack([m.values for m in mtams]).astype(np.float32) if mtams else np.zeros((0, 4, cfg.W), np.float32)
    ds = MtamDataset(
        X=X,
        labels=[m.label for m in mtams],
        trace_ids=[m.source_trace_id for m in mtams],
        dropped=[m.dropped for m in mtams],
        config=cfg,
        scheme=scheme,
        errors=errors,
    )
    return ds, errors

"""MTAM dataset container.

Binary file::

    8 bytes   magic  b"AFPDSET\\0"
    uint16    format_version (little-endian)
    uint32    header length H
    H bytes   UTF-8 JSON header: format_version, W, mode, gap, scheme,
              label_map, count, config_hash, row_order
    count*4*W float32 little-endian, row-major (sample, row, window)

Sidecar ``<file>.index.json``: per-sample ``trace_id``, ``label`` and
``dropped`` plus the extraction errors, so samples can be traced back.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from agentfp.errors import CorruptWeights, VersionError
from agentfp.features.mtam import ROWS, MtamConfig

MAGIC = b"AFPDSET\0"
FORMAT_VERSION = 1
LABEL_KINDS = ("full", "behavior", "agent")


def select_label(label: str | None, kind: str = "full") -> str | None:
    """Pick one part of a ``"<behavior>/<agent>"`` trace label.

    Labels without a slash serve as both behavior and agent label.
    """
    if label is None or kind == "full":
        return label
    if kind not in LABEL_KINDS:
        raise ValueError(f"label kind must be one of {LABEL_KINDS}")
    behavior, sep, agent = label.partition("/")
    if not sep:
        return label
    return behavior if kind == "behavior" else agent


@dataclass
class MtamDataset:
    X: np.ndarray  # (n, 4, W) float32
    labels: list
    trace_ids: list
    dropped: list = field(default_factory=list)
    config: MtamConfig = field(default_factory=MtamConfig)
    scheme: str = "none"
    errors: list = field(default_factory=list)

    def __len__(self):
        return len(self.X)

    @property
    def config_hash(self) -> str:
        return self.config.digest

    @property
    def label_map(self) -> list:
        return sorted({lab for lab in self.labels if lab is not None})

    def targets(self, kind: str = "full") -> np.ndarray:
        return np.array([select_label(lab, kind) for lab in self.labels], dtype=object)

    def tensors(self) -> np.ndarray:
        """Samples shaped (n, 2, 2, W) for the classifier."""
        return self.X.reshape(len(self.X), 2, 2, -1)

    def subset(self, idx) -> "MtamDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return MtamDataset(
            self.X[idx],
            [self.labels[i] for i in idx],
            [self.trace_ids[i] for i in idx],
            [self.dropped[i] for i in idx] if self.dropped else [],
            self.config,
            self.scheme,
        )


def index_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".index.json")


def save_dataset(ds: MtamDataset, path) -> None:
    cfg = ds.config
    header = {
        "format_version": FORMAT_VERSION,
        "W": cfg.W,
        "mode": cfg.mode,
        "gap": cfg.gap if cfg.mode == "fixed_gap" else None,
        "clip_counts": cfg.clip_counts,
        "clip_bytes": cfg.clip_bytes,
        "scheme": ds.scheme,
        "label_map": ds.label_map,
        "count": len(ds),
        "config_hash": cfg.digest,
        "row_order": list(ROWS),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    body = np.ascontiguousarray(ds.X, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HI", FORMAT_VERSION, len(blob)))
        fh.write(blob)
        fh.write(body)
    index = {
        "format_version": FORMAT_VERSION,
        "count": len(ds),
        "records": [
            {"index": i, "trace_id": tid, "label": lab, "dropped": int(ds.dropped[i]) if ds.dropped else 0}
            for i, (tid, lab) in enumerate(zip(ds.trace_ids, ds.labels))
        ],
        "errors": [str(e) for e in ds.errors],
    }
    index_path(path).write_text(json.dumps(index, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")


def load_dataset(path) -> MtamDataset:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise CorruptWeights(f"{path}: not an MTAM dataset (bad magic)")
    if len(raw) < 14:
        raise CorruptWeights(f"{path}: truncated header")
    version, hlen = struct.unpack_from("<HI", raw, 8)
    if version != FORMAT_VERSION:
        raise VersionError(f"{path}: dataset format {version}, expected {FORMAT_VERSION}")
    try:
        header = json.loads(raw[14:14 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptWeights(f"{path}: unreadable header") from exc
    W, count = header["W"], header["count"]
    body = raw[14 + hlen:]
    if len(body) != count * 4 * W * 4:
        raise CorruptWeights(f"{path}: expected {count * 4 * W * 4} data bytes, found {len(body)}")
    X = np.frombuffer(body, dtype="<f4").reshape(count, 4, W).astype(np.float32)
    cfg = MtamConfig(
        W=W,
        mode=header["mode"],
        gap=header["gap"] if header["gap"] is not None else MtamConfig.gap,
        clip_counts=header.get("clip_counts"),
        clip_bytes=header.get("clip_bytes"),
    )
    if cfg.digest != header["config_hash"]:
        raise CorruptWeights(f"{path}: config hash mismatch")

    ipath = index_path(path)
    if ipath.exists():
        index = json.loads(ipath.read_text(encoding="utf-8"))
        recs = index["records"]
        if len(recs) != count:
            raise CorruptWeights(f"{ipath}: index has {len(recs)} records, dataset has {count}")
        trace_ids = [r["trace_id"] for r in recs]
        labels = [r["label"] for r in recs]
        dropped = [r.get("dropped", 0) for r in recs]
        errors = index.get("errors", [])
    else:
        trace_ids = [f"sample-{i}" for i in range(count)]
        labels = [None] * count
        dropped, errors = [0] * count, []
    return MtamDataset(X, labels, trace_ids, dropped, cfg, header["scheme"], errors)

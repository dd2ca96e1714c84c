"""Model container and CSV exports.

Model file::

    8 bytes   magic  b"AFPMODEL"
    uint8     format_version
    uint32    header length H (little-endian)
    H bytes   UTF-8 JSON header: format_version, arch, label_map, normalization,
              trained_on, input_layout, tensors [{name, dtype, shape}], sha256
    tensor bytes, little-endian, concatenated in header order

``sha256`` covers the tensor bytes.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from pathlib import Path

import numpy as np
import torch

from agentfp.classifier.arch import ArchConfig
from agentfp.classifier.model import INPUT_LAYOUT, Model, MtamNet
from agentfp.errors import CorruptWeights, VersionError

MAGIC = b"AFPMODEL"
FORMAT_VERSION = 1
_PREFIX = len(MAGIC) + 5


def save_model(model: Model, path) -> None:
    tensors, chunks = [], []
    for name, t in model.net.state_dict().items():
        arr = t.detach().cpu().numpy()
        arr = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        tensors.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape)})
        chunks.append(np.ascontiguousarray(arr).tobytes())
    body = b"".join(chunks)
    header = {
        "format_version": FORMAT_VERSION,
        "arch": model.arch.to_dict(),
        "label_map": list(model.label_map),
        "normalization": model.normalization,
        "trained_on": model.trained_on,
        "input_layout": INPUT_LAYOUT,
        "tensors": tensors,
        "sha256": hashlib.sha256(body).hexdigest(),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<BI", FORMAT_VERSION, len(blob)))
        fh.write(blob)
        fh.write(body)


def load_model(path) -> Model:
    raw = Path(path).read_bytes()
    if len(raw) < _PREFIX or raw[:len(MAGIC)] != MAGIC:
        raise CorruptWeights(f"{path}: not a model file")
    version, hlen = struct.unpack_from("<BI", raw, len(MAGIC))
    if version != FORMAT_VERSION:
        raise VersionError(f"{path}: model format {version}, this build reads {FORMAT_VERSION}")
    try:
        header = json.loads(raw[_PREFIX:_PREFIX + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptWeights(f"{path}: unreadable header") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise VersionError(f"{path}: header declares format {header.get('format_version')}")
    if header.get("input_layout") != INPUT_LAYOUT:
        raise CorruptWeights(f"{path}: unexpected input layout {header.get('input_layout')!r}")

    body = raw[_PREFIX + hlen:]
    if hashlib.sha256(body).hexdigest() != header["sha256"]:
        raise CorruptWeights(f"{path}: weight digest mismatch (truncated or modified)")

    arch = ArchConfig.from_dict(header["arch"])
    net = MtamNet(arch)
    expected = net.state_dict()
    state, off = {}, 0
    for spec in header["tensors"]:
        dtype = np.dtype(spec["dtype"])
        n = int(np.prod(spec["shape"], dtype=np.int64)) * dtype.itemsize
        arr = np.frombuffer(body, dtype=dtype, count=n // dtype.itemsize, offset=off).reshape(spec["shape"])
        off += n
        name = spec["name"]
        if name not in expected or tuple(expected[name].shape) != tuple(arr.shape):
            raise CorruptWeights(f"{path}: tensor {name!r} does not fit the architecture")
        state[name] = torch.from_numpy(arr.astype(arr.dtype.newbyteorder("="))).to(expected[name].dtype)
    if off != len(body) or set(state) != set(expected):
        raise CorruptWeights(f"{path}: tensor table does not match the weight data")
    net.load_state_dict(state)
    net.eval()
    return Model(arch, net, header["label_map"], header["trained_on"], header["normalization"])


def write_embeddings(path, trace_ids, labels, embeddings) -> None:
    embeddings = np.asarray(embeddings)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trace_id", "label"] + [f"v_{i + 1}" for i in range(embeddings.shape[1])])
        for tid, lab, vec in zip(trace_ids, labels, embeddings):
            w.writerow([tid, "" if lab is None else lab] + [repr(float(v)) for v in vec])

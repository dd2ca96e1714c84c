"""Occupation similarity graph, modularity and Louvain communities."""

from __future__ import annotations

import csv
import hashlib
import json
import struct
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import sparse

from agentfp.errors import (
    CorruptWeights,
    DegenerateNetwork,
    DegenerateNetworkWarning,
    UnknownOccupation,
    ValidationError,
    VersionError,
)
from agentfp.occupation.taxonomy import Taxonomy, dwa_profile


def sorensen(a, b) -> float:
    """Sørensen-Dice coefficient 2|A∩B| / (|A|+|B|); two empty sets give 0."""
    a, b = set(a), set(b)
    denom = len(a) + len(b)
    return 2 * len(a & b) / denom if denom else 0.0


def sorensen_matrix(rows: list, cols: list) -> np.ndarray:
    """Pairwise Sørensen similarity between two lists of sets."""
    vocab = {}
    for s in list(rows) + list(cols):
        for item in s:
            vocab.setdefault(item, len(vocab))

    def incidence(sets):
        indptr, indices = [0], []
        for s in sets:
            indices.extend(vocab[x] for x in s)
            indptr.append(len(indices))
        data = np.ones(len(indices), dtype=np.float64)
        return sparse.csr_matrix((data, indices, indptr), shape=(len(sets), max(len(vocab), 1)))

    R, C = incidence(rows), incidence(cols)
    inter = (R @ C.T).toarray()
    size_r = np.array([len(s) for s in rows], dtype=np.float64)
    size_c = np.array([len(s) for s in cols], dtype=np.float64)
    denom = size_r[:, None] + size_c[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(denom > 0, 2 * inter / np.where(denom > 0, denom, 1), 0.0)
    return out


@dataclass(frozen=True, eq=False)
class OccupationNetwork:
    codes: tuple
    profiles: tuple  # frozenset of DWA ids per node
    A: np.ndarray
    titles: tuple = ()
    partition: np.ndarray | None = None  # community index per node
    community_ids: tuple = ()
    community_labels: tuple = ()

    @property
    def n(self) -> int:
        return len(self.codes)

    @property
    def strengths(self) -> np.ndarray:
        return self.A.sum(axis=1)

    @property
    def m(self) -> float:
        return float(self.A.sum()) / 2

    @property
    def K(self) -> int:
        return len(self.community_ids)

    def index(self, code: str) -> int:
        try:
            return self.codes.index(code)
        except ValueError:
            raise UnknownOccupation(code) from None

    def community_of(self, code: str) -> str:
        return self.community_ids[self.partition[self.index(code)]]

    @property
    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps(list(self.codes)).encode())
        h.update(np.ascontiguousarray(self.A).tobytes())
        if self.partition is not None:
            h.update(np.asarray(self.partition, dtype=np.int64).tobytes())
        return h.hexdigest()[:16]


def build_network(taxonomy: Taxonomy) -> OccupationNetwork:
    """Weighted graph over occupations (ordered by code), zero diagonal."""
    codes = tuple(sorted(taxonomy.occupations))
    if len(codes) < 2:
        raise ValidationError("an occupation network needs at least 2 occupations")
    profiles = tuple(dwa_profile(taxonomy, c) for c in codes)
    A = sorensen_matrix(list(profiles), list(profiles))
    np.fill_diagonal(A, 0.0)
    A = (A + A.T) / 2  # exact symmetry
    if not A.any():
        warnings.warn("occupation profiles are pairwise disjoint; m = 0", DegenerateNetworkWarning)
    titles = tuple(taxonomy.occupations[c].title for c in codes)
    return OccupationNetwork(codes, profiles, A, titles)


def _adjacency(graph) -> np.ndarray:
    return graph.A if isinstance(graph, OccupationNetwork) else np.asarray(graph, dtype=np.float64)


def modularity(graph, partition=None, resolution: float = 1.0) -> float:
    """Q = (1/2m) Σ_ij [A_ij − γ s_i s_j / 2m] δ(c_i, c_j), diagonal terms included."""
    A = _adjacency(graph)
    if partition is None:
        partition = graph.partition
    labels = np.unique(np.asarray(partition), return_inverse=True)[1].ravel()
    two_m = A.sum()
    if two_m <= 0:
        raise DegenerateNetwork("modularity is undefined for a graph with no edge weight")
    if labels.max() == 0:
        return 1.0 - resolution  # the sum telescopes; skip the rounding noise
    s = A.sum(axis=1)
    k = labels.max() + 1
    onehot = np.zeros((len(labels), k))
    onehot[np.arange(len(labels)), labels] = 1.0
    internal = np.einsum("ic,ij,jc->", onehot, A, onehot)
    tot = onehot.T @ s
    return float(internal / two_m - resolution * np.sum(tot ** 2) / two_m ** 2)


def _one_level(A: np.ndarray, rng: np.random.Generator, resolution: float) -> tuple[np.ndarray, bool]:
    """Local moving phase; returns community labels and whether anything moved."""
    n = len(A)
    two_m = A.sum()
    s = A.sum(axis=1)
    comm = np.arange(n)
    tot = s.copy()
    moved_any = False
    while True:
        moved = False
        for i in rng.permutation(n):
            ci = comm[i]
            w = A[i].copy()
            w[i] = 0.0  # self loops do not link i to any community
            links = np.bincount(comm, weights=w, minlength=n)
            tot[ci] -= s[i]
            gain = links - resolution * tot * s[i] / two_m
            gain[links <= 0] = -np.inf
            gain[ci] = links[ci] - resolution * tot[ci] * s[i] / two_m
            best = int(np.argmax(gain))
            if not gain[best] > gain[ci] + 1e-12:
                best = ci
            tot[best] += s[i]
            if best != ci:
                comm[i] = best
                moved = moved_any = True
        if not moved:
            break
    return np.unique(comm, return_inverse=True)[1].ravel(), moved_any


def louvain(A, seed=0, resolution: float = 1.0) -> np.ndarray:
    """Louvain community detection on a dense symmetric weight matrix.

    Node visiting order is a seeded permutation, so results are reproducible
    for a fixed seed and node order.  Returns a community index per node.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.sum() <= 0:
        raise DegenerateNetwork("cannot detect communities in a graph with no edge weight")
    rng = np.random.default_rng(seed)
    node_comm = np.arange(len(A))
    level = A
    while True:
        labels, moved = _one_level(level, rng, resolution)
        if not moved:
            break
        node_comm = labels[node_comm]
        k = labels.max() + 1
        agg = np.zeros((len(labels), k))
        agg[np.arange(len(labels)), labels] = 1.0
        level = agg.T @ level @ agg
        if k == 1:
            break
    return _first_appearance(node_comm)


def _first_appearance(labels: np.ndarray) -> np.ndarray:
    order = {}
    return np.array([order.setdefault(c, len(order)) for c in labels], dtype=np.int64)


def detect_communities(network: OccupationNetwork, seed=0, resolution: float = 1.0) -> OccupationNetwork:
    if network.m <= 0:
        raise DegenerateNetwork("cannot detect communities: m = 0")
    part = louvain(network.A, seed, resolution)
    ids = tuple(str(c) for c in range(part.max() + 1))
    return replace(network, partition=part, community_ids=ids, community_labels=ids)


def set_partition(network: OccupationNetwork, mapping: dict, labels: dict | None = None) -> OccupationNetwork:
    """Install an external partition verbatim.

    ``mapping``: occupation code -> community id; ``labels``: community id -> label.
    Communities are indexed in sorted id order (numerically when all ids are integers).
    """
    missing = [c for c in network.codes if c not in mapping]
    if missing:
        raise ValidationError(f"partition is not total; {len(missing)} occupations unassigned, e.g. {missing[0]!r}")
    extra = [c for c in mapping if c not in set(network.codes)]
    if extra:
        raise UnknownOccupation(extra[0])
    ids = sorted({str(mapping[c]) for c in network.codes},
                 key=lambda x: (0, int(x), "") if x.lstrip("-").isdigit() else (1, 0, x))
    pos = {cid: k for k, cid in enumerate(ids)}
    part = np.array([pos[str(mapping[c])] for c in network.codes], dtype=np.int64)
    labels = labels or {}
    names = tuple(labels.get(cid, cid) for cid in ids)
    return replace(network, partition=part, community_ids=tuple(ids), community_labels=names)


def read_partition(path) -> tuple[dict, dict]:
    mapping, labels = {}, {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            cid = row["community_id"].strip()
            mapping[row["occupation_code"].strip()] = cid
            lab = (row.get("community_label") or "").strip()
            if lab:
                labels[cid] = lab
    return mapping, labels


def write_partition(network: OccupationNetwork, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["occupation_code", "community_id", "community_label"])
        for code, k in zip(network.codes, network.partition):
            w.writerow([code, network.community_ids[k], network.community_labels[k]])


# network container: magic, uint8 version, uint32 header length, JSON header, float64 A
_MAGIC = b"AFPGRAPH"
_VERSION = 1


def save_network(network: OccupationNetwork, path) -> None:
    body = np.ascontiguousarray(network.A, dtype="<f8").tobytes()
    header = {
        "format_version": _VERSION,
        "codes": list(network.codes),
        "titles": list(network.titles),
        "profiles": [sorted(p) for p in network.profiles],
        "partition": None if network.partition is None else [int(x) for x in network.partition],
        "community_ids": list(network.community_ids),
        "community_labels": list(network.community_labels),
        "sha256": hashlib.sha256(body).hexdigest(),
    }
    blob = json.dumps(header, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC + struct.pack("<BI", _VERSION, len(blob)) + blob + body)


def load_network(path) -> OccupationNetwork:
    raw = Path(path).read_bytes()
    if raw[:8] != _MAGIC or len(raw) < 13:
        raise CorruptWeights(f"{path}: not a network file")
    version, hlen = struct.unpack_from("<BI", raw, 8)
    if version != _VERSION:
        raise VersionError(f"{path}: network format {version}, expected {_VERSION}")
    try:
        header = json.loads(raw[13:13 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptWeights(f"{path}: unreadable header") from exc
    body = raw[13 + hlen:]
    n = len(header["codes"])
    if len(body) != n * n * 8 or hashlib.sha256(body).hexdigest() != header["sha256"]:
        raise CorruptWeights(f"{path}: adjacency data corrupt or truncated")
    A = np.frombuffer(body, dtype="<f8").reshape(n, n).astype(np.float64)
    part = header["partition"]
    return OccupationNetwork(
        tuple(header["codes"]),
        tuple(frozenset(p) for p in header["profiles"]),
        A,
        tuple(header.get("titles", ())),
        None if part is None else np.array(part, dtype=np.int64),
        tuple(header["community_ids"]),
        tuple(header["community_labels"]),
    )

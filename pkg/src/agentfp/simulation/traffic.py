"""Seeded synthetic traces built from phase-structured archetypes."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from agentfp.errors import ConfigError
from agentfp.ingest.traces import PacketRecord, Trace

BEHAVIOR_LABELS = ("Action", "Analysis", "Image", "Redirect", "PlainText")
LIBRARY_VERSION = 1


@dataclass(frozen=True)
class SizeDist:
    median: float
    sigma: float
    min: int = 1
    max: int = 1500

    def sample(self, rng, n):
        raw = self.median * np.exp(self.sigma * rng.standard_normal(n))
        return np.clip(np.rint(raw), max(self.min, 1), self.max).astype(np.int64)


@dataclass(frozen=True)
class Phase:
    name: str
    delay: tuple
    packets: tuple
    gap: tuple
    max_gap: float
    out_fraction: float
    size_out: SizeDist
    size_in: SizeDist
    repeat: tuple = (1, 1)

    def __post_init__(self):
        for attr in ("delay", "packets", "gap", "repeat"):
            lo, hi = getattr(self, attr)
            if lo > hi or lo < 0:
                raise ConfigError(f"phase {self.name!r}: invalid {attr} range {lo}..{hi}")
        if self.packets[0] < 1 or self.repeat[0] < 1:
            raise ConfigError(f"phase {self.name!r}: packets and repeat must be >= 1")
        if not 0 <= self.out_fraction <= 1:
            raise ConfigError(f"phase {self.name!r}: out_fraction must lie in [0, 1]")
        if self.max_gap <= 0:
            raise ConfigError(f"phase {self.name!r}: max_gap must be positive")

    @classmethod
    def from_dict(cls, d):
        return cls(
            name=d["name"],
            delay=tuple(d["delay"]),
            packets=tuple(d["packets"]),
            gap=tuple(d["gap"]),
            max_gap=float(d["max_gap"]),
            out_fraction=float(d["out_fraction"]),
            size_out=SizeDist(**d["size_out"]),
            size_in=SizeDist(**d["size_in"]),
            repeat=tuple(d.get("repeat", (1, 1))),
        )


@dataclass(frozen=True)
class BehaviorArchetype:
    name: str
    label: str
    phases: tuple

    def __post_init__(self):
        if not self.phases:
            raise ConfigError(f"archetype {self.name!r} has no phases")
        if self.label not in BEHAVIOR_LABELS:
            raise ConfigError(f"archetype {self.name!r}: unknown behavior label {self.label!r}")

    @property
    def trace_label(self) -> str:
        return f"{self.label}/{self.name}"

    @property
    def delay_floor(self) -> float:
        """Smallest configured idle period before any non-initial phase."""
        floors = [p.delay[0] for p in self.phases[1:]]
        return max(floors) if floors else 0.0


def load_archetypes(path=None) -> dict:
    """Archetype library keyed by name; the packaged file when ``path`` is None."""
    if path is None:
        text = resources.files("agentfp.simulation").joinpath("data/archetypes.json").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    doc = json.loads(text)
    if doc.get("version") != LIBRARY_VERSION:
        raise ConfigError(f"archetype library version {doc.get('version')!r}, expected {LIBRARY_VERSION}")
    out = {}
    for a in doc["archetypes"]:
        arch = BehaviorArchetype(a["name"], a["label"], tuple(Phase.from_dict(p) for p in a["phases"]))
        out[arch.name] = arch
    return out


def library_margins(path=None) -> dict:
    if path is None:
        text = resources.files("agentfp.simulation").joinpath("data/archetypes.json").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return json.loads(text)["separability"]


def gen_trace(archetype: BehaviorArchetype, seed, trace_id: str | None = None) -> Trace:
    """One synthetic session; identical seeds give identical traces."""
    rng = np.random.default_rng(seed)
    times, dirs, sizes = [], [], []
    t = 0.0
    for phase in archetype.phases:
        for _ in range(rng.integers(phase.repeat[0], phase.repeat[1] + 1)):
            t += rng.uniform(*phase.delay)
            n = int(rng.integers(phase.packets[0], phase.packets[1] + 1))
            mean_gap = rng.uniform(*phase.gap)
            gaps = np.minimum(rng.exponential(mean_gap, n), phase.max_gap)
            gaps[0] = 0.0
            ts = t + np.cumsum(gaps)
            out = rng.random(n) < phase.out_fraction
            sz = np.where(out, phase.size_out.sample(rng, n), phase.size_in.sample(rng, n))
            times.append(ts)
            dirs.append(np.where(out, 1, -1))
            sizes.append(sz)
            t = float(ts[-1])
    times = np.concatenate(times)
    times -= times[0]
    dirs = np.concatenate(dirs)
    sizes = np.concatenate(sizes)
    packets = tuple(PacketRecord(float(a), int(b), int(c)) for a, b, c in zip(times, dirs, sizes))
    if trace_id is None:
        trace_id = f"{archetype.name}-{seed}" if np.isscalar(seed) else f"{archetype.name}-{'-'.join(map(str, seed))}"
    return Trace(trace_id, packets, "primary", archetype.trace_label)


def gen_traffic(archetypes, per_class: int, seed: int = 0) -> list[Trace]:
    """``per_class`` traces for each archetype, ordered by archetype then index."""
    if isinstance(archetypes, dict):
        archetypes = list(archetypes.values())
    traces = []
    for k, arch in enumerate(archetypes):
        for i in range(per_class):
            traces.append(gen_trace(arch, (seed, k, i), trace_id=f"{arch.name}-{seed}-{i:05d}"))
    return traces


def signature(trace: Trace, burst_window: float = 1.0) -> dict:
    """Coarse descriptors used to check archetype separability.

    ``idle_gap_s``: longest inter-packet gap; ``outbound_burst_bytes``: most
    outbound bytes inside any ``burst_window``-second bin; ``inbound_bytes``:
    total inbound bytes.
    """
    t, d, s = trace.times, trace.directions, trace.sizes
    gaps = np.diff(t)
    bins = np.floor(t / burst_window).astype(np.int64)
    out_bytes = np.bincount(bins[d > 0], weights=s[d > 0].astype(float)) if (d > 0).any() else np.zeros(1)
    return {
        "idle_gap_s": float(gaps.max()) if len(gaps) else 0.0,
        "outbound_burst_bytes": float(out_bytes.max()),
        "inbound_bytes": float(s[d < 0].sum()),
    }

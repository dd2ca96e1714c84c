"""Trace values, session assembly and the canonical JSONL format."""

from __future__ import annotations

import ipaddress
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from agentfp.errors import ConfigError, OrderError, SchemaError

SCOPES = ("primary", "mixed")
SIZE_BASES = ("payload", "ip")


@dataclass(frozen=True)
class PacketRecord:
    """One observed packet: time, direction (+1 out / -1 in), size in bytes.

    ``src_flow`` is the flow key ``proto|client_ip|client_port|remote_ip|remote_port``;
    it is only used for scoping and is not part of the canonical trace file.
    """

    t: float
    d: int
    s: int
    src_flow: str = ""

    def __post_init__(self):
        if self.d not in (-1, 1):
            raise ValueError(f"direction must be -1 or +1, got {self.d!r}")
        if self.s < 1:
            raise ValueError(f"size must be >= 1, got {self.s!r}")
        if not math.isfinite(self.t) or self.t < 0:
            raise ValueError(f"time must be finite and >= 0, got {self.t!r}")

    @property
    def remote_addr(self) -> str | None:
        parts = self.src_flow.split("|")
        return parts[3] if len(parts) == 5 else None


@dataclass(frozen=True)
class Trace:
    trace_id: str
    packets: tuple[PacketRecord, ...]
    flow_scope: str = "primary"
    label: str | None = None
    degenerate: bool = False
    # absolute time of the first packet; in-memory only, not serialized
    start: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if not isinstance(self.packets, tuple):
            object.__setattr__(self, "packets", tuple(self.packets))
        if self.flow_scope not in SCOPES:
            raise ValueError(f"flow_scope must be one of {SCOPES}, got {self.flow_scope!r}")
        if not self.packets:
            if not self.degenerate:
                raise ValueError(f"trace {self.trace_id!r} is empty")
            return
        if self.packets[0].t != 0.0:
            raise ValueError(f"trace {self.trace_id!r} is not re-based (first t={self.packets[0].t})")
        prev = 0.0
        for i, p in enumerate(self.packets):
            if p.t < prev:
                raise OrderError(f"packet {i} at t={p.t} precedes t={prev}", field=f"packets[{i}].t")
            prev = p.t

    def __len__(self):
        return len(self.packets)

    @property
    def duration(self) -> float:
        return self.packets[-1].t if self.packets else 0.0

    @cached_property
    def times(self) -> np.ndarray:
        return np.fromiter((p.t for p in self.packets), dtype=np.float64, count=len(self.packets))

    @cached_property
    def directions(self) -> np.ndarray:
        return np.fromiter((p.d for p in self.packets), dtype=np.int8, count=len(self.packets))

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.fromiter((p.s for p in self.packets), dtype=np.int64, count=len(self.packets))

    @classmethod
    def from_arrays(cls, trace_id, times, directions, sizes, *, label=None, flow_scope="primary"):
        """Build a trace from parallel arrays; times are re-based to start at zero."""
        times = np.asarray(times, dtype=np.float64)
        order = np.argsort(times, kind="stable")
        start = float(times[order[0]]) if len(times) else 0.0
        packets = tuple(
            PacketRecord(float(times[i] - start), int(directions[i]), int(sizes[i])) for i in order
        )
        return cls(trace_id, packets, flow_scope, label, degenerate=not packets, start=start)

    def absolute_records(self) -> list[PacketRecord]:
        return [PacketRecord(p.t + self.start, p.d, p.s, p.src_flow) for p in self.packets]


def _parse_networks(addrs: Iterable[str]) -> tuple:
    nets = []
    for a in addrs:
        try:
            nets.append(ipaddress.ip_network(a.strip(), strict=False))
        except ValueError as exc:
            raise ConfigError(f"invalid address or prefix {a!r}") from exc
    return tuple(nets)


@dataclass(frozen=True)
class IngestConfig:
    """Observer position: which addresses are the user and which the LLM vendor.

    ``size_basis="ip"`` measures packets by IP datagram length; only with it can
    ``min_payload=0`` keep pure ACKs, since every record needs a positive size.
    """

    client_addrs: frozenset
    provider_addrs: frozenset = frozenset()
    scope: str = "primary"
    min_payload: int = 1
    size_basis: str = "payload"

    def __post_init__(self):
        object.__setattr__(self, "client_addrs", frozenset(self.client_addrs))
        object.__setattr__(self, "provider_addrs", frozenset(self.provider_addrs))
        if not self.client_addrs:
            raise ConfigError("client_addrs must not be empty")
        if self.scope not in SCOPES:
            raise ConfigError(f"scope must be one of {SCOPES}, got {self.scope!r}")
        if self.size_basis not in SIZE_BASES:
            raise ConfigError(f"size_basis must be one of {SIZE_BASES}")
        if self.min_payload < 0:
            raise ConfigError("min_payload must be >= 0")
        if self.min_payload == 0 and self.size_basis == "payload":
            raise ConfigError("min_payload=0 requires size_basis='ip' (zero-byte records are invalid)")
        clients = self._client_ips
        for net in self._provider_nets:
            if any(ip.version == net.version and ip in net for ip in clients):
                raise ConfigError(f"client address overlaps provider prefix {net}")

    @cached_property
    def _client_ips(self) -> frozenset:
        try:
            return frozenset(ipaddress.ip_address(a.strip()) for a in self.client_addrs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @cached_property
    def _provider_nets(self) -> tuple:
        return _parse_networks(self.provider_addrs)

    def is_client(self, addr) -> bool:
        return ipaddress.ip_address(addr) in self._client_ips

    def is_provider(self, addr) -> bool:
        if addr is None:
            return False
        ip = ipaddress.ip_address(addr)
        return any(ip.version == n.version and ip in n for n in self._provider_nets)


def assemble_traces(
    records: Sequence[PacketRecord],
    cfg: IngestConfig,
    session_gap: float = 30.0,
    *,
    label: str | None = None,
    id_prefix: str = "trace",
) -> list[Trace]:
    """Group absolute-time records into per-session traces.

    Scope filtering happens before gap splitting, so re-assembling the output
    (via ``Trace.absolute_records``) reproduces the same partition.
    """
    if session_gap <= 0:
        raise ConfigError("session_gap must be positive")
    kept = sorted(
        (r for r in records if cfg.scope == "mixed" or cfg.is_provider(r.remote_addr)),
        key=lambda r: r.t,
    )
    sessions: list[list[PacketRecord]] = []
    for r in kept:
        if sessions and r.t - sessions[-1][-1].t <= session_gap:
            sessions[-1].append(r)
        else:
            sessions.append([r])

    traces = []
    for i, sess in enumerate(sessions):
        t0 = sess[0].t
        packets = tuple(PacketRecord(r.t - t0, r.d, r.s, r.src_flow) for r in sess)
        traces.append(Trace(f"{id_prefix}-{i:05d}", packets, cfg.scope, label, start=t0))
    return traces


def _trace_to_obj(trace: Trace) -> dict:
    return {
        "trace_id": trace.trace_id,
        "label": trace.label,
        "flow_scope": trace.flow_scope,
        "packets": [[p.t, p.d, p.s] for p in trace.packets],
    }


def dumps_trace(trace: Trace) -> str:
    return json.dumps(_trace_to_obj(trace), ensure_ascii=False, separators=(",", ":"))


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v) -> bool:
    return (_is_int(v) or isinstance(v, float)) and math.isfinite(v)


def loads_trace(line: str, lineno: int | None = None) -> Trace:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}", line=lineno) from exc
    if not isinstance(obj, dict):
        raise SchemaError("expected a JSON object", line=lineno)
    for key in ("trace_id", "label", "flow_scope", "packets"):
        if key not in obj:
            raise SchemaError("missing required field", line=lineno, field=key)
    if not isinstance(obj["trace_id"], str):
        raise SchemaError("must be a string", line=lineno, field="trace_id")
    if obj["label"] is not None and not isinstance(obj["label"], str):
        raise SchemaError("must be a string or null", line=lineno, field="label")
    if obj["flow_scope"] not in SCOPES:
        raise SchemaError(f"must be one of {SCOPES}", line=lineno, field="flow_scope")
    if not isinstance(obj["packets"], list):
        raise SchemaError("must be a list", line=lineno, field="packets")

    packets = []
    prev = None
    for i, item in enumerate(obj["packets"]):
        path = f"packets[{i}]"
        if not isinstance(item, list) or len(item) != 3:
            raise SchemaError("expected [t, d, s]", line=lineno, field=path)
        t, d, s = item
        if not _is_number(t) or t < 0:
            raise SchemaError("t must be a finite number >= 0", line=lineno, field="t")
        if not _is_int(d) or d not in (-1, 1):
            raise SchemaError("d must be -1 or +1", line=lineno, field="d")
        if not _is_int(s) or s < 1:
            raise SchemaError("s must be an integer >= 1", line=lineno, field="s")
        if prev is not None and t < prev:
            raise OrderError(f"t={t} precedes t={prev}", line=lineno, field=f"{path}.t")
        if prev is None and t != 0:
            raise SchemaError("first packet must have t = 0", line=lineno, field=f"{path}.t")
        prev = t
        packets.append(PacketRecord(float(t), d, s))
    if not packets:
        raise SchemaError("trace has no packets", line=lineno, field="packets")
    return Trace(obj["trace_id"], tuple(packets), obj["flow_scope"], obj["label"])


def write_traces(traces: Iterable[Trace], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for trace in traces:
            fh.write(dumps_trace(trace))
            fh.write("\n")


def read_traces(path) -> list[Trace]:
    traces = []
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip():
                traces.append(loads_trace(line, lineno))
    return traces

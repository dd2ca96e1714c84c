from agentfp.ingest.pcap import iter_records, parse_pcap, read_pcap
from agentfp.ingest.traces import (
    IngestConfig,
    PacketRecord,
    Trace,
    assemble_traces,
    dumps_trace,
    loads_trace,
    read_traces,
    write_traces,
)

__all__ = [
    "IngestConfig",
    "PacketRecord",
    "Trace",
    "assemble_traces",
    "dumps_trace",
    "iter_records",
    "loads_trace",
    "parse_pcap",
    "read_pcap",
    "read_traces",
    "write_traces",
]

"""Encrypted LLM-agent traffic fingerprinting and occupation profiling."""

from agentfp.classifier import TrafficCNNClassifier, gradient_check, load_model, save_model
from agentfp.errors import AgentFpError, ValidationError
from agentfp.evaluation import EvalReport, compute_metrics, kfold_evaluate, split_dataset
from agentfp.features import MtamConfig, MtamTransformer, batch_extract, extract_mtam
from agentfp.ingest import IngestConfig, Trace, assemble_traces, read_pcap, read_traces, write_traces
from agentfp.occupation import OccupationProfiler, build_network, correlate, infer_occupation, modularity

__version__ = "0.1.0"

__all__ = [
    "AgentFpError",
    "EvalReport",
    "IngestConfig",
    "MtamConfig",
    "MtamTransformer",
    "OccupationProfiler",
    "Trace",
    "TrafficCNNClassifier",
    "ValidationError",
    "assemble_traces",
    "batch_extract",
    "build_network",
    "compute_metrics",
    "correlate",
    "extract_mtam",
    "gradient_check",
    "infer_occupation",
    "kfold_evaluate",
    "load_model",
    "modularity",
    "read_pcap",
    "read_traces",
    "save_model",
    "split_dataset",
    "write_traces",
]

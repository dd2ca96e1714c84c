from agentfp.features.dataset import MtamDataset, load_dataset, save_dataset, select_label
from agentfp.features.mtam import (
    MODES,
    MTAM,
    ROWS,
    SCHEMES,
    MtamConfig,
    batch_extract,
    extract_mtam,
    normalize,
    normalize_array,
    window_index,
)
from agentfp.features.transformer import MtamTransformer

__all__ = [
    "MODES",
    "MTAM",
    "ROWS",
    "SCHEMES",
    "MtamConfig",
    "MtamDataset",
    "MtamTransformer",
    "batch_extract",
    "extract_mtam",
    "load_dataset",
    "normalize",
    "normalize_array",
    "save_dataset",
    "select_label",
    "window_index",
]

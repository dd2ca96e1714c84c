from agentfp.classifier.arch import ArchConfig, Block1d, Block2d, default_arch, tiny_arch
from agentfp.classifier.estimator import TrafficCNNClassifier
from agentfp.classifier.gradcheck import gradient_check
from agentfp.classifier.io import load_model, save_model, write_embeddings
from agentfp.classifier.model import (
    UNMONITORED,
    Model,
    MtamNet,
    Prediction,
    build_model,
    decide,
    forward,
    predict,
    tune_threshold,
)
from agentfp.classifier.training import TrainConfig, train, write_history

__all__ = [
    "UNMONITORED",
    "ArchConfig",
    "Block1d",
    "Block2d",
    "Model",
    "MtamNet",
    "Prediction",
    "TrafficCNNClassifier",
    "TrainConfig",
    "build_model",
    "decide",
    "default_arch",
    "forward",
    "gradient_check",
    "load_model",
    "predict",
    "save_model",
    "tiny_arch",
    "train",
    "tune_threshold",
    "write_embeddings",
    "write_history",
]

"""The sentiment classifier: base encoder, syntax fusion, aggregation and output head."""

from .config import PAPER_SCALE, ModelConfig, apply_kv, format_kv, load_model_config, parse_kv
from .network import AbsaModel, DropoutStream, Forward, Prediction, adjacency, argmax
from .vocab import CLS, PAD, SEP, UNK, LabelIndex, Vocab

__all__ = [
    "AbsaModel", "CLS", "DropoutStream", "Forward", "LabelIndex", "ModelConfig", "PAD",
    "PAPER_SCALE", "Prediction", "SEP", "UNK", "Vocab", "adjacency", "apply_kv", "argmax",
    "format_kv", "load_model_config", "parse_kv",
]

"""Reverse-mode differentiation over dense float64 arrays, plus Adam and checkpoints."""

from . import ops
from .checkpoint import load_checkpoint, save_checkpoint
from .optim import AdamState, adam_step
from .tensor import NumericError, ShapeError, Tape, Tensor, active_tape, backward

__all__ = [
    "AdamState", "NumericError", "ShapeError", "Tape", "Tensor", "active_tape", "adam_step",
    "backward", "load_checkpoint", "ops", "save_checkpoint",
]

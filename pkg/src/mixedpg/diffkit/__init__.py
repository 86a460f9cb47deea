"""Minimal reverse-mode autodiff, ELU networks, Adam, and checkpoints."""
from . import functional
from .checkpoint import load_checkpoint, save_checkpoint
from .mlp import MlpParams, ShapeError, forward_mlp, polyak_update
from .optim import AdamState, NonFiniteGradientError, adam_step, linear_decay
from .tape import Tape, TapeError, Tensor, active_tape, backward, stop_gradient

__all__ = [
    "AdamState",
    "MlpParams",
    "NonFiniteGradientError",
    "ShapeError",
    "Tape",
    "TapeError",
    "Tensor",
    "active_tape",
    "adam_step",
    "backward",
    "forward_mlp",
    "functional",
    "linear_decay",
    "load_checkpoint",
    "polyak_update",
    "save_checkpoint",
    "stop_gradient",
]

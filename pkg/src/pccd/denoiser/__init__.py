"""Noise-prediction network, its training loop and checkpoint files."""

from .train import (
    AdamState,
    DenoiserCheckpoint,
    TrainConfig,
    TrainResult,
    adam_step,
    forward,
    gradient,
    loss_and_gradient,
    mae_loss,
    train,
)
from .unet import PRESETS, DenoiserConfig, UNet1D, init_params, param_shapes
from .checkpoint import checkpoint_from_bytes, checkpoint_to_bytes, load_checkpoint, save_checkpoint

__all__ = [
    "AdamState", "DenoiserCheckpoint", "TrainConfig", "TrainResult", "adam_step", "forward", "gradient",
    "loss_and_gradient", "mae_loss", "train", "PRESETS", "DenoiserConfig", "UNet1D", "init_params",
    "param_shapes", "checkpoint_from_bytes", "checkpoint_to_bytes", "load_checkpoint", "save_checkpoint",
]

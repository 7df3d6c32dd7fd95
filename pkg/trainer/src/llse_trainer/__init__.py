"""Trainer for the low-latency speech-enhancement mask estimators.

Consumes mixture sets produced by the engine's `simulate` command, trains
GRU / causal U-Net mask estimators with an implicit-mask MSE loss, and
exports weights in the engine's NMWF format.
"""

from .data import load_training_set, read_manifest
from .export import export_model, write_weight_file
from .models import MaskGru, MaskUnet, make_model
from .train import TrainConfig, all_ones_mask_mse, train

__version__ = "0.1.0"

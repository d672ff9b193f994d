"""Desk-scale trainer for the band-gain/strength enhancement model.

Consumes .pnft feature/target records, trains the conv+GRU graph against
the perceptual gain/strength losses, and exports int8 .pnwt weight files
for the runtime engine.
"""

from .config import TrainConfig
from .losses import gain_loss, strength_loss
from .model import GainStrengthNet
from .records import read_pnft, write_pnft
from .export import export_quantized, load_exported
from .train import train

__version__ = "0.1.0"

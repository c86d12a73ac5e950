from .codebook import Codebook, perplexity
from .quantizer import (
    QuantizedMotion,
    ResidualQuantizer,
    ScaleSchedule,
    dequantize,
    interpolate,
    nearest_codes,
    quantize_multiscale,
)
from .model import MotionVqVae, VqConfig, essential_loss, rvq_loss, total_vq_loss
from .train import VqTrainConfig, capacity_probe, load_vq_checkpoint, save_vq_checkpoint, train_vq

__all__ = [
    "Codebook",
    "perplexity",
    "QuantizedMotion",
    "ResidualQuantizer",
    "ScaleSchedule",
    "dequantize",
    "interpolate",
    "nearest_codes",
    "quantize_multiscale",
    "MotionVqVae",
    "VqConfig",
    "essential_loss",
    "rvq_loss",
    "total_vq_loss",
    "VqTrainConfig",
    "capacity_probe",
    "load_vq_checkpoint",
    "save_vq_checkpoint",
    "train_vq",
]

from .tmr import EvalEmbedding, TmrConfig, TmrModel
from .train import TmrTrainConfig, load_tmr_checkpoint, save_tmr_checkpoint, tmr_loss, train_tmr
from .metrics import (
    clip_score,
    fid,
    joint_position_error,
    metrics_report,
    mm_dist,
    mmodality,
    r_precision,
)

__all__ = [
    "EvalEmbedding",
    "TmrConfig",
    "TmrModel",
    "TmrTrainConfig",
    "load_tmr_checkpoint",
    "save_tmr_checkpoint",
    "tmr_loss",
    "train_tmr",
    "clip_score",
    "fid",
    "joint_position_error",
    "metrics_report",
    "mm_dist",
    "mmodality",
    "r_precision",
]

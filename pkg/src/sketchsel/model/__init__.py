from .feature_hash import FeatureHashModel, fh_step, fh_width_for
from .io import load_model, save_model
from .loss import LossKind, LossSpec, SparseStep, gradient, softmax
from .topk_model import (
    Algo,
    DenseTopKModel,
    batch_iht_step,
    decay_unselected,
    flush_buffer,
    hard_threshold,
    iht_batch_step,
    iht_step,
    merge_mission_shards,
    mission_batch_step,
    mission_step,
)
from .training import EpochStats, StoppingRule, TrainReport, predict, train

__all__ = [
    "Algo",
    "DenseTopKModel",
    "EpochStats",
    "FeatureHashModel",
    "LossKind",
    "LossSpec",
    "SparseStep",
    "StoppingRule",
    "TrainReport",
    "batch_iht_step",
    "decay_unselected",
    "fh_step",
    "fh_width_for",
    "flush_buffer",
    "gradient",
    "hard_threshold",
    "iht_batch_step",
    "iht_step",
    "load_model",
    "merge_mission_shards",
    "mission_batch_step",
    "mission_step",
    "predict",
    "save_model",
    "softmax",
    "train",
]

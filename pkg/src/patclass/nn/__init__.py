from patclass.nn.checkpoint import load_checkpoint, save_checkpoint
from patclass.nn.encoder import PrecomputedFeatures, build_vocab
from patclass.nn.loss import LossConfig, weighted_bce, weighted_bce_grad
from patclass.nn.model import Model, ModelConfig
from patclass.nn.ops import relu, sigmoid
from patclass.nn.optim import Adam
from patclass.nn.train import (
    TrainConfig,
    TrainResult,
    batch_loss_and_grads,
    dataset_loss_and_error,
    predict,
    predict_proba,
    train_model,
    write_epoch_log,
)

__all__ = [
    "Adam",
    "LossConfig",
    "Model",
    "ModelConfig",
    "PrecomputedFeatures",
    "TrainConfig",
    "TrainResult",
    "batch_loss_and_grads",
    "build_vocab",
    "dataset_loss_and_error",
    "load_checkpoint",
    "predict",
    "predict_proba",
    "relu",
    "save_checkpoint",
    "sigmoid",
    "train_model",
    "weighted_bce",
    "weighted_bce_grad",
    "write_epoch_log",
]

"""Mini-batch training loop with early stopping on validation loss."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from patclass.errors import ConfigError, NumericError
from patclass.nn.loss import LossConfig, weighted_bce, weighted_bce_grad
from patclass.nn.model import Model
from patclass.nn.optim import Adam

Batch = Sequence[Sequence[str]]  # token lists, or a (B, d) feature array


@dataclass
class TrainConfig:
    learning_rate: float = 2e-6
    batch_size: int = 96
    dropout: float = 0.5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    max_epochs: int = 50
    patience: int = 2
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if self.patience < 0:
            raise ConfigError("patience must be >= 0")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float
    train_err: float
    val_err: float


@dataclass
class TrainResult:
    model: Model
    log: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0


def _take(xs, idx):
    if isinstance(xs, np.ndarray):
        return xs[idx]
    return [xs[i] for i in idx]


def batch_loss_and_grads(
    model: Model,
    xs,
    labels: np.ndarray,
    loss_cfg: LossConfig,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
):
    """Forward + backward for one batch; returns (loss, grads)."""
    y, cache = model.forward(xs, dropout=dropout, rng=rng)
    loss = weighted_bce(y, labels, loss_cfg)
    dLdy = weighted_bce_grad(y, labels, loss_cfg).astype(y.dtype)
    grads = model.backward(cache, dLdy)
    return loss, grads


def dataset_loss_and_error(
    model: Model,
    xs,
    labels: np.ndarray,
    loss_cfg: LossConfig,
    threshold: float = 0.5,
    batch_size: int = 256,
):
    """Dropout-free loss and subset error (1 - exact-match accuracy)."""
    n = labels.shape[0]
    losses = []
    wrong = 0
    for start in range(0, n, batch_size):
        idx = range(start, min(start + batch_size, n))
        y, _ = model.forward(_take(xs, list(idx)))
        losses.append(weighted_bce(y, labels[list(idx)], loss_cfg) * len(idx))
        preds = y >= threshold
        wrong += int((preds != labels[list(idx)].astype(bool)).any(axis=1).sum())
    return sum(losses) / n, wrong / n


def predict_proba(model: Model, xs) -> np.ndarray:
    y, _ = model.forward(xs)
    return y


def predict(
    model: Model,
    tokens: Sequence[str] | np.ndarray,
    threshold: float = 0.5,
) -> tuple[np.ndarray, list[str]]:
    """Probabilities and assigned class codes for one document."""
    if isinstance(tokens, np.ndarray) and tokens.ndim == 1:
        xs = tokens[None, :]
    else:
        xs = [tokens]
    y = predict_proba(model, xs)[0]
    assigned = [model.codes[i] for i in range(len(model.codes)) if y[i] >= threshold]
    return y, assigned


def train_model(
    model: Model,
    train_xs,
    train_labels: np.ndarray,
    val_xs,
    val_labels: np.ndarray,
    cfg: TrainConfig,
    loss_cfg: LossConfig,
) -> TrainResult:
    """Train until validation loss stops improving.

    Per-epoch shuffling, dropout masks, and the optimizer are all driven
    by a single generator seeded from cfg.seed, so identical inputs give
    identical trajectories. The checkpoint with the best validation loss
    is restored before returning. Stops after `patience` + 1 consecutive
    epochs without improvement, or at max_epochs.
    """
    if train_labels.shape[0] == 0 or val_labels.shape[0] == 0:
        raise ConfigError("train and validation splits must be non-empty")
    rng = np.random.default_rng(cfg.seed)
    adam = Adam(
        model.params,
        lr=cfg.learning_rate,
        beta1=cfg.adam_beta1,
        beta2=cfg.adam_beta2,
        eps=cfg.adam_eps,
    )
    n = train_labels.shape[0]
    best_loss = np.inf
    best_params = model.copy_params()
    best_epoch = 0
    bad_epochs = 0
    log: list[EpochStats] = []
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            _, grads = batch_loss_and_grads(
                model,
                _take(train_xs, list(idx)),
                train_labels[idx],
                loss_cfg,
                dropout=cfg.dropout,
                rng=rng,
            )
            adam.step(model.params, grads)
        train_loss, train_err = dataset_loss_and_error(
            model, train_xs, train_labels, loss_cfg
        )
        val_loss, val_err = dataset_loss_and_error(model, val_xs, val_labels, loss_cfg)
        log.append(EpochStats(epoch, train_loss, val_loss, train_err, val_err))
        if not np.isfinite(val_loss):
            raise NumericError(f"validation loss diverged at epoch {epoch}")
        if val_loss < best_loss:
            best_loss = val_loss
            best_params = model.copy_params()
            best_epoch = epoch
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs > cfg.patience:
                break
    model.set_params(best_params)
    return TrainResult(model=model, log=log, best_epoch=best_epoch, stopped_epoch=epoch)


def write_epoch_log(log: list[EpochStats], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "train_loss", "val_loss", "train_err", "val_err"])
        for row in log:
            writer.writerow(
                [
                    row.epoch,
                    f"{row.train_loss:.10g}",
                    f"{row.val_loss:.10g}",
                    f"{row.train_err:.10g}",
                    f"{row.val_err:.10g}",
                ]
            )

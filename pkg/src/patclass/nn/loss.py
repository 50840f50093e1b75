"""Weighted binary cross-entropy over the label vector.

Per sample: L = -sum_i beta_i * (gamma_i * l_i * log(y_i)
                                 + (1 - l_i) * log(1 - y_i))
where beta_i is the per-class importance weight and gamma_i the positive
weight that trades recall against precision on imbalanced classes. The
batch loss is the mean of per-sample losses. Logs are clamped at 1e-12.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from patclass.errors import ConfigError, NumericError

LOG_EPS = 1e-12

DEFAULT_BETA = (4.0, 3.0, 2.0, 2.0, 1.0, 1.0, 3.0, 2.0, 2.0)
DEFAULT_GAMMA = (2.0,) * 9


@dataclass
class LossConfig:
    beta: tuple[float, ...] = DEFAULT_BETA
    gamma: tuple[float, ...] = DEFAULT_GAMMA

    def __post_init__(self):
        self.beta = tuple(float(b) for b in self.beta)
        self.gamma = tuple(float(g) for g in self.gamma)
        if len(self.beta) != len(self.gamma):
            raise ConfigError("beta and gamma must have the same length")
        if any(b <= 0 for b in self.beta) or any(g <= 0 for g in self.gamma):
            raise ConfigError("all loss weights must be positive")

    @classmethod
    def uniform(cls, n_classes: int, beta: float = 1.0, gamma: float = 1.0):
        return cls(beta=(beta,) * n_classes, gamma=(gamma,) * n_classes)

    def arrays(self, dtype=np.float64) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.asarray(self.beta, dtype=dtype),
            np.asarray(self.gamma, dtype=dtype),
        )


def _check_shapes(y: np.ndarray, labels: np.ndarray, cfg: LossConfig):
    if y.shape != labels.shape:
        raise ConfigError(f"shape mismatch: y {y.shape} vs labels {labels.shape}")
    if y.shape[-1] != len(cfg.beta):
        raise ConfigError(
            f"loss weights cover {len(cfg.beta)} classes but y has {y.shape[-1]}"
        )
    if not np.all(np.isfinite(y)):
        raise NumericError("non-finite probabilities in loss input")


def weighted_bce(y: np.ndarray, labels: np.ndarray, cfg: LossConfig) -> float:
    """Mean weighted BCE over a batch. y and labels are (B, C) or (C,)."""
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    labels = np.atleast_2d(np.asarray(labels, dtype=np.float64))
    _check_shapes(y, labels, cfg)
    beta, gamma = cfg.arrays()
    pos = gamma * labels * np.log(np.maximum(y, LOG_EPS))
    neg = (1.0 - labels) * np.log(np.maximum(1.0 - y, LOG_EPS))
    per_sample = -(beta * (pos + neg)).sum(axis=1)
    return float(per_sample.mean())


def weighted_bce_grad(y: np.ndarray, labels: np.ndarray, cfg: LossConfig) -> np.ndarray:
    """dL/dy for the batch-mean loss; same shape as y."""
    y2 = np.atleast_2d(np.asarray(y, dtype=np.float64))
    labels2 = np.atleast_2d(np.asarray(labels, dtype=np.float64))
    _check_shapes(y2, labels2, cfg)
    beta, gamma = cfg.arrays()
    B = y2.shape[0]
    grad = -beta * (
        gamma * labels2 / np.maximum(y2, LOG_EPS)
        - (1.0 - labels2) / np.maximum(1.0 - y2, LOG_EPS)
    ) / B
    return grad.reshape(np.shape(y))

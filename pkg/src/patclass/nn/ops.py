"""Elementwise activations and dense-layer primitives."""

from __future__ import annotations

import numpy as np


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def relu_grad(pre: np.ndarray) -> np.ndarray:
    # Derivative taken as 0 at exactly 0.
    return (pre > 0).astype(pre.dtype)


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function.

    Uses exp(-z) for z >= 0 and exp(z)/(1 + exp(z)) otherwise, so large
    negative inputs underflow gracefully instead of overflowing.
    """
    z = np.asarray(z)
    out = np.empty_like(z, dtype=z.dtype if z.dtype.kind == "f" else np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int, dtype) -> np.ndarray:
    s = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=(fan_out, fan_in)).astype(dtype)


def dense_forward(W: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    # x: (B, in) -> (B, out)
    return x @ W.T + b


def dense_backward(W: np.ndarray, x: np.ndarray, dout: np.ndarray):
    """Gradients of y = x @ W.T + b. Returns (dx, dW, db)."""
    return dout @ W, dout.T @ x, dout.sum(axis=0)

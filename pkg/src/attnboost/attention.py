"""Gated two-layer network producing attention-weighted hidden features.

Forward pass: h = ReLU(W1 x + b1), alpha = sigmoid(W_attn h + b_attn),
h_tilde = alpha * h, y_hat = sigmoid(w2 . h_tilde + b2), trained with
binary cross-entropy. Gradients are exact; the ReLU subgradient at 0 is 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .tabular import FeatureMatrix

AUGMENT_MODES = ("weighted-hidden", "attention-vector")
OPTIMIZERS = ("plain-sgd", "adaptive-moments")


def sigmoid(x):
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


@dataclass
class AttentionParams:
    W1: np.ndarray  # (k, d)
    b1: np.ndarray  # (k,)
    W_attn: np.ndarray  # (k, k)
    b_attn: np.ndarray  # (k,)
    w2: np.ndarray  # (k,)
    b2: float
    d: int
    k: int

    def copy(self) -> "AttentionParams":
        return AttentionParams(
            W1=self.W1.copy(),
            b1=self.b1.copy(),
            W_attn=self.W_attn.copy(),
            b_attn=self.b_attn.copy(),
            w2=self.w2.copy(),
            b2=self.b2,
            d=self.d,
            k=self.k,
        )


@dataclass
class ForwardTrace:
    x: np.ndarray
    h: np.ndarray
    alpha: np.ndarray
    h_tilde: np.ndarray
    y_hat: float


@dataclass
class Gradients:
    W1: np.ndarray
    b1: np.ndarray
    W_attn: np.ndarray
    b_attn: np.ndarray
    w2: np.ndarray
    b2: float


@dataclass
class TrainConfig:
    k: int = 128
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0
    optimizer: str = "adaptive-moments"
    prob_clamp: float = 1e-12

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("hidden width k must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 < self.prob_clamp < 0.5:
            raise ValueError("prob_clamp must be in (0, 0.5)")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")


def init_params(d: int, k: int, seed: int) -> AttentionParams:
    """Fan-balanced uniform weights, zero biases, from a seeded generator."""
    if d < 1 or k < 1:
        raise ValueError(f"dimensions must be positive, got d={d}, k={k}")
    rng = np.random.default_rng(seed)

    def uniform(fan_in, fan_out, shape):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=shape)

    return AttentionParams(
        W1=uniform(d, k, (k, d)),
        b1=np.zeros(k),
        W_attn=uniform(k, k, (k, k)),
        b_attn=np.zeros(k),
        w2=uniform(k, 1, (k,)),
        b2=0.0,
        d=d,
        k=k,
    )


def forward(params: AttentionParams, x: np.ndarray) -> ForwardTrace:
    """Run one input vector through the gated network, keeping intermediates."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.d,):
        raise ValueError(f"input has shape {x.shape}, expected ({params.d},)")
    h = np.maximum(params.W1 @ x + params.b1, 0.0)
    alpha = sigmoid(params.W_attn @ h + params.b_attn)
    h_tilde = alpha * h
    y_hat = float(sigmoid(params.w2 @ h_tilde + params.b2))
    return ForwardTrace(x=x, h=h, alpha=alpha, h_tilde=h_tilde, y_hat=y_hat)


def _forward_batch(params: AttentionParams, X: np.ndarray):
    H = np.maximum(X @ params.W1.T + params.b1, 0.0)
    A = sigmoid(H @ params.W_attn.T + params.b_attn)
    Ht = A * H
    y_hat = sigmoid(Ht @ params.w2 + params.b2)
    return H, A, Ht, y_hat


def bce_loss(y_hat: float, y: int, prob_clamp: float = 1e-12) -> float:
    """Binary cross-entropy with the probability clamped away from 0 and 1."""
    if not 0.0 <= y_hat <= 1.0:
        raise ValueError(f"y_hat must be a probability, got {y_hat}")
    p = min(max(y_hat, prob_clamp), 1.0 - prob_clamp)
    return -(y * np.log(p) + (1 - y) * np.log(1.0 - p))


def backward(params: AttentionParams, trace: ForwardTrace, y: int) -> Gradients:
    """Exact loss gradients for one sample, given its forward trace."""
    dz_out = trace.y_hat - y
    g_b2 = dz_out
    g_w2 = dz_out * trace.h_tilde
    d_ht = dz_out * params.w2
    d_alpha = d_ht * trace.h
    dz_attn = d_alpha * trace.alpha * (1.0 - trace.alpha)
    g_W_attn = np.outer(dz_attn, trace.h)
    g_b_attn = dz_attn
    d_h = d_ht * trace.alpha + params.W_attn.T @ dz_attn
    dz1 = d_h * (trace.h > 0.0)
    return Gradients(
        W1=np.outer(dz1, trace.x),
        b1=dz1,
        W_attn=g_W_attn,
        b_attn=g_b_attn,
        w2=g_w2,
        b2=g_b2,
    )


def _backward_batch(params: AttentionParams, X, y, H, A, Ht, y_hat) -> Gradients:
    """Mean-over-batch gradients, vectorized across rows."""
    n = X.shape[0]
    dz_out = (y_hat - y) / n
    g_b2 = float(dz_out.sum())
    g_w2 = Ht.T @ dz_out
    d_ht = np.outer(dz_out, params.w2)
    dz_attn = d_ht * H * A * (1.0 - A)
    g_W_attn = dz_attn.T @ H
    g_b_attn = dz_attn.sum(axis=0)
    d_h = d_ht * A + dz_attn @ params.W_attn
    dz1 = d_h * (H > 0.0)
    return Gradients(
        W1=dz1.T @ X,
        b1=dz1.sum(axis=0),
        W_attn=g_W_attn,
        b_attn=g_b_attn,
        w2=g_w2,
        b2=g_b2,
    )


class _AdamState:
    """Per-parameter first/second moment accumulators."""

    BETA1 = 0.9
    BETA2 = 0.999
    EPS = 1e-8

    def __init__(self, params: AttentionParams):
        self.t = 0
        self.m = {name: np.zeros_like(getattr(params, name)) for name in
                  ("W1", "b1", "W_attn", "b_attn", "w2")}
        self.v = {name: np.zeros_like(getattr(params, name)) for name in
                  ("W1", "b1", "W_attn", "b_attn", "w2")}
        self.m["b2"] = 0.0
        self.v["b2"] = 0.0

    def step(self, params: AttentionParams, grads: Gradients, lr: float) -> None:
        self.t += 1
        bc1 = 1.0 - self.BETA1 ** self.t
        bc2 = 1.0 - self.BETA2 ** self.t
        for name in ("W1", "b1", "W_attn", "b_attn", "w2", "b2"):
            g = getattr(grads, name)
            self.m[name] = self.BETA1 * self.m[name] + (1.0 - self.BETA1) * g
            self.v[name] = self.BETA2 * self.v[name] + (1.0 - self.BETA2) * (g * g)
            update = lr * (self.m[name] / bc1) / (np.sqrt(self.v[name] / bc2) + self.EPS)
            setattr(params, name, getattr(params, name) - update)


def _sgd_step(params: AttentionParams, grads: Gradients, lr: float) -> None:
    for name in ("W1", "b1", "W_attn", "b_attn", "w2", "b2"):
        setattr(params, name, getattr(params, name) - lr * getattr(grads, name))


def train(
    X: FeatureMatrix, y: np.ndarray, config: TrainConfig
) -> tuple[AttentionParams, list[float]]:
    """Mini-batch training with seeded per-epoch shuffling.

    Returns the trained parameters and the mean per-sample loss of each epoch.
    """
    values = X.values
    y = np.asarray(y)
    n = values.shape[0]
    if n == 0:
        raise DataError("cannot train on an empty dataset")
    if y.shape[0] != n:
        raise ValueError("feature matrix and target lengths differ")
    if not np.isin(y, (0, 1)).all():
        raise DataError("labels must be 0 or 1")

    params = init_params(values.shape[1], config.k, config.seed)
    rng = np.random.default_rng(config.seed)
    adam = _AdamState(params) if config.optimizer == "adaptive-moments" else None
    clamp = config.prob_clamp
    history: list[float] = []

    for _ in range(config.epochs):
        perm = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, config.batch_size):
            batch = perm[start : start + config.batch_size]
            Xb, yb = values[batch], y[batch]
            H, A, Ht, y_hat = _forward_batch(params, Xb)
            p = np.clip(y_hat, clamp, 1.0 - clamp)
            loss_sum += float(-(yb * np.log(p) + (1 - yb) * np.log(1.0 - p)).sum())
            grads = _backward_batch(params, Xb, yb, H, A, Ht, y_hat)
            if adam is not None:
                adam.step(params, grads, config.learning_rate)
            else:
                _sgd_step(params, grads, config.learning_rate)
        history.append(loss_sum / n)
    return params, history


def augment(params: AttentionParams, X: FeatureMatrix, mode: str = "weighted-hidden") -> FeatureMatrix:
    """Append per-row network features (h_tilde or alpha) to the input columns."""
    if mode not in AUGMENT_MODES:
        raise ValueError(f"augment mode must be one of {AUGMENT_MODES}, got {mode!r}")
    if X.d != params.d:
        raise ValueError(f"matrix width {X.d} does not match network input width {params.d}")
    _, A, Ht, _ = _forward_batch(params, X.values)
    block = Ht if mode == "weighted-hidden" else A
    names = list(X.feature_names) + [f"attn_{i}" for i in range(params.k)]
    return FeatureMatrix(values=np.hstack([X.values, block]), feature_names=names)

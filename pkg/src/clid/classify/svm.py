"""One-vs-rest linear SVM trained by sub-gradient descent on the L2-regularised hinge loss."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from clid.classify.base import N_CLASSES, Classifier, check_training
from clid.errors import NumericalError


@dataclass(frozen=True)
class SvmConfig:
    lr: float = 1e-2
    epochs: int = 50
    lam: float = 1e-4
    batch_size: int = 32
    seed: int = 42


def hinge_losses(margins: np.ndarray) -> np.ndarray:
    """Per-entry hinge loss ``max(0, 1 - margin)``."""
    return np.maximum(0.0, 1.0 - margins)


def objective(W: np.ndarray, b: np.ndarray, X: np.ndarray, Y: np.ndarray, lam: float) -> float:
    """Sum over the one-vs-rest problems of ``lam/2 |w|^2 + mean hinge``."""
    margins = Y * (X @ W.T + b)
    return float(0.5 * lam * (W * W).sum() + hinge_losses(margins).mean(axis=0).sum())


@dataclass(frozen=True)
class SvmModel(Classifier):
    weights: np.ndarray
    biases: np.ndarray
    config: SvmConfig = SvmConfig()
    objective_trace: tuple = field(default=(), compare=False)

    kind = "svm"

    @property
    def input_dim(self) -> int:
        return self.weights.shape[1]

    def _scores(self, X: np.ndarray) -> np.ndarray:
        return X @ self.weights.T + self.biases


def train_svm(X: np.ndarray, y: np.ndarray, config: SvmConfig = SvmConfig()) -> SvmModel:
    X, y = check_training(X, y)
    n, d = X.shape
    Y = np.where(y[:, None] == np.arange(N_CLASSES)[None, :], 1.0, -1.0)
    W = np.zeros((N_CLASSES, d))
    b = np.zeros(N_CLASSES)
    rng = np.random.default_rng(config.seed)
    lr = config.lr
    trace = [objective(W, b, X, Y, config.lam)]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            xb, yb = X[idx], Y[idx]
            active = (yb * (xb @ W.T + b) < 1.0) * yb
            gW = config.lam * W - active.T @ xb / len(idx)
            gb = -active.sum(axis=0) / len(idx)
            W -= lr * gW
            b -= lr * gb
        trace.append(objective(W, b, X, Y, config.lam))
        if not np.isfinite(trace[-1]):
            raise NumericalError("SVM objective is not finite")
        if trace[-1] > trace[-2]:
            lr *= 0.5
    return SvmModel(W, b, config, tuple(trace))

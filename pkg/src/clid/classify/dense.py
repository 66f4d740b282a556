"""Dense network: 256-ReLU, dropout 0.3, 64-ReLU, 4-way softmax."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from clid.classify.base import N_CLASSES, Classifier, check_training
from clid.nn import Params, TrainConfig, glorot_init, he_init, softmax, train_epochs

HIDDEN = (256, 64)
DROPOUT = 0.3


def init_nn(input_dim: int, seed: int) -> Params:
    rng = np.random.default_rng(seed)
    h1, h2 = HIDDEN
    return {
        "w1": he_init(rng, input_dim, h1), "b1": np.zeros(h1),
        "w2": he_init(rng, h1, h2), "b2": np.zeros(h2),
        "w3": glorot_init(rng, h2, N_CLASSES), "b3": np.zeros(N_CLASSES),
    }


def dropout_mask(rng: np.random.Generator, n: int, rate: float = DROPOUT) -> np.ndarray:
    """Inverted-dropout multipliers for the first hidden layer."""
    return (rng.random((n, HIDDEN[0])) >= rate) / (1.0 - rate)


def logits(p: Params, X: np.ndarray) -> np.ndarray:
    h1 = np.maximum(X @ p["w1"] + p["b1"], 0)
    h2 = np.maximum(h1 @ p["w2"] + p["b2"], 0)
    return h2 @ p["w3"] + p["b3"]


def loss_and_grads(p: Params, X: np.ndarray, y: np.ndarray, mask: np.ndarray | None = None):
    """Mean cross-entropy and its gradients; ``mask`` applies dropout after layer 1."""
    n = X.shape[0]
    a1 = X @ p["w1"] + p["b1"]
    h1 = np.maximum(a1, 0)
    h1d = h1 if mask is None else h1 * mask
    a2 = h1d @ p["w2"] + p["b2"]
    h2 = np.maximum(a2, 0)
    probs = softmax(h2 @ p["w3"] + p["b3"])
    loss = float(-np.log(np.maximum(probs[np.arange(n), y], 1e-300)).mean())
    d3 = probs.copy()
    d3[np.arange(n), y] -= 1.0
    d3 /= n
    g = {"w3": h2.T @ d3, "b3": d3.sum(0)}
    d2 = (d3 @ p["w3"].T) * (a2 > 0)
    g["w2"] = h1d.T @ d2
    g["b2"] = d2.sum(0)
    dh1 = d2 @ p["w2"].T
    if mask is not None:
        dh1 = dh1 * mask
    d1 = dh1 * (a1 > 0)
    g["w1"] = X.T @ d1
    g["b1"] = d1.sum(0)
    return loss, g


@dataclass(frozen=True)
class NnConfig:
    lr: float = 1e-3
    epochs: int = 40
    batch_size: int = 64
    seed: int = 42


@dataclass(frozen=True)
class NnModel(Classifier):
    params: dict
    config: NnConfig = NnConfig()
    history: tuple = field(default=(), compare=False)

    kind = "nn"

    @property
    def input_dim(self) -> int:
        return self.params["w1"].shape[0]

    def _scores(self, X: np.ndarray) -> np.ndarray:
        return logits(self.params, np.asarray(X, dtype=float))


def train_nn(X: np.ndarray, y: np.ndarray, config: NnConfig = NnConfig()) -> NnModel:
    X, y = check_training(X, y)
    X = X.astype(float)
    params = init_nn(X.shape[1], config.seed)
    rng = np.random.default_rng([config.seed, 1])

    def step(p, idx, r):
        return loss_and_grads(p, X[idx], y[idx], dropout_mask(r, len(idx)))

    tc = TrainConfig(config.lr, config.epochs, config.batch_size, config.seed)
    history = train_epochs(params, len(y), step, tc, rng, "nn")
    return NnModel(params, config, tuple(history))

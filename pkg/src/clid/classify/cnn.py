"""Character CNN: embedding, parallel convolutions of widths 2/3/4, global max
pooling and a softmax head on the concatenated 192-d pooled vector."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from clid.classify.base import N_CLASSES, Classifier, check_training
from clid.errors import DataError
from clid.nn import Params, TrainConfig, glorot_init, he_init, softmax, train_epochs

WIDTHS = (2, 3, 4)
EMBED_DIM = 32
N_FILTERS = 64


@dataclass(frozen=True)
class CnnConfig:
    lr: float = 1e-3
    epochs: int = 40
    batch_size: int = 64
    seed: int = 42
    embed_dim: int = EMBED_DIM
    n_filters: int = N_FILTERS


def init_cnn(vocab_size: int, config: CnnConfig = CnnConfig()) -> Params:
    rng = np.random.default_rng(config.seed)
    e, f = config.embed_dim, config.n_filters
    p = {"emb": rng.normal(0.0, 0.1, size=(vocab_size, e))}
    for w in WIDTHS:
        p[f"conv{w}_w"] = he_init(rng, w * e, f)
        p[f"conv{w}_b"] = np.zeros(f)
    p["head_w"] = glorot_init(rng, len(WIDTHS) * f, N_CLASSES)
    p["head_b"] = np.zeros(N_CLASSES)
    return p


def _windows(E: np.ndarray, w: int) -> np.ndarray:
    # (B, L, e) -> (B, L-w+1, w*e), window rows laid out position-major
    v = sliding_window_view(E, w, axis=1)  # (B, P, e, w)
    B, P, e, _ = v.shape
    return v.transpose(0, 1, 3, 2).reshape(B, P, w * e)


def _forward(p: Params, ids: np.ndarray):
    E = p["emb"][ids]
    pooled, cache = [], []
    for w in WIDTHS:
        win = _windows(E, w)
        act = win @ p[f"conv{w}_w"] + p[f"conv{w}_b"]
        pos = act.argmax(axis=1)  # (B, F)
        top = np.take_along_axis(act, pos[:, None, :], axis=1)[:, 0, :]
        pooled.append(np.maximum(top, 0))
        cache.append((win, pos, top))
    return E, np.concatenate(pooled, axis=1), cache


def pooled_features(p: Params, ids: np.ndarray) -> np.ndarray:
    return _forward(p, ids)[1]


def logits(p: Params, ids: np.ndarray) -> np.ndarray:
    return pooled_features(p, ids) @ p["head_w"] + p["head_b"]


def loss_and_grads(p: Params, ids: np.ndarray, y: np.ndarray):
    """Mean cross-entropy and gradients.

    Max pooling commutes with the monotone ReLU, so pooling runs on the
    pre-activations and the ReLU is applied to the pooled value.
    """
    n = ids.shape[0]
    E, h, cache = _forward(p, ids)
    probs = softmax(h @ p["head_w"] + p["head_b"])
    loss = float(-np.log(np.maximum(probs[np.arange(n), y], 1e-300)).mean())
    d = probs.copy()
    d[np.arange(n), y] -= 1.0
    d /= n
    g = {"head_w": h.T @ d, "head_b": d.sum(0)}
    dh = d @ p["head_w"].T
    dE = np.zeros_like(E)
    f = p[f"conv{WIDTHS[0]}_w"].shape[1]
    e = E.shape[2]
    rows = np.arange(n)[:, None]
    for i, (w, (win, pos, top)) in enumerate(zip(WIDTHS, cache)):
        dtop = dh[:, i * f : (i + 1) * f] * (top > 0)  # (B, F)
        picked = np.take_along_axis(win, pos[:, :, None], axis=1)  # (B, F, w*e)
        g[f"conv{w}_w"] = np.einsum("bfk,bf->kf", picked, dtop)
        g[f"conv{w}_b"] = dtop.sum(0)
        Wr = p[f"conv{w}_w"].reshape(w, e, f)
        dwin = np.einsum("oef,bf->bfoe", Wr, dtop)  # (B, F, w, e)
        for o in range(w):
            np.add.at(dE, (np.broadcast_to(rows, pos.shape), pos + o), dwin[:, :, o, :])
    g_emb = np.zeros_like(p["emb"])
    np.add.at(g_emb, ids.reshape(-1), dE.reshape(-1, e))
    g["emb"] = g_emb
    return loss, g


@dataclass(frozen=True)
class CnnModel(Classifier):
    params: dict
    config: CnnConfig = CnnConfig()
    history: tuple = field(default=(), compare=False)

    kind = "cnn"
    batch = 256

    @property
    def vocab_size(self) -> int:
        return self.params["emb"].shape[0]

    @property
    def input_dim(self) -> int:
        return 128

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] < max(WIDTHS):
            raise DataError(f"sequences must have at least {max(WIDTHS)} positions")
        if X.size and (X.min() < 0 or X.max() >= self.vocab_size):
            raise DataError("character id outside the embedding table")
        return X.astype(np.int64)

    def _scores(self, X: np.ndarray) -> np.ndarray:
        parts = [logits(self.params, X[i : i + self.batch]) for i in range(0, len(X), self.batch)]
        return np.concatenate(parts) if parts else np.zeros((0, N_CLASSES))


def train_cnn(sequences: np.ndarray, y: np.ndarray, vocab_size: int, config: CnnConfig = CnnConfig()) -> CnnModel:
    ids, y = check_training(sequences, y)
    ids = ids.astype(np.int64)
    params = init_cnn(vocab_size, config)
    rng = np.random.default_rng([config.seed, 1])

    def step(p, idx, r):
        return loss_and_grads(p, ids[idx], y[idx])

    tc = TrainConfig(config.lr, config.epochs, config.batch_size, config.seed)
    history = train_epochs(params, len(y), step, tc, rng, "cnn")
    return CnnModel(params, config, tuple(history))

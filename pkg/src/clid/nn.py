"""Shared numpy building blocks for the hand-differentiated networks.

Parameters live in plain ``dict[str, np.ndarray]`` (float64).  Every model
provides ``loss_and_grads(params, batch...) -> (loss, grads)``; the optimiser,
the epoch loop and the finite-difference checker only rely on that shape.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from clid.errors import NumericalError

log = logging.getLogger(__name__)

Params = dict[str, np.ndarray]


def he_init(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))


def glorot_init(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / (fan_in + fan_out)), size=(fan_in, fan_out))


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs: np.ndarray, y: np.ndarray) -> float:
    return float(-np.log(np.maximum(probs[np.arange(len(y)), y], 1e-300)).mean())


def argmax_lowest(scores: np.ndarray) -> np.ndarray:
    """Row-wise argmax; exact ties resolve to the lowest class index."""
    return np.asarray(scores).argmax(axis=-1)


class Adam:
    def __init__(self, params: Params, lr: float = 1e-3, b1: float = 0.9, b2: float = 0.999, eps: float = 1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: Params, grads: Params) -> None:
        self.t += 1
        c1 = 1 - self.b1**self.t
        c2 = 1 - self.b2**self.t
        for k, g in grads.items():
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    epochs: int = 40
    batch_size: int = 64
    seed: int = 42


def train_epochs(
    params: Params,
    n: int,
    step_fn: Callable[[Params, np.ndarray, np.random.Generator], tuple[float, Params]],
    config: TrainConfig,
    rng: np.random.Generator,
    name: str = "model",
    on_epoch: Callable[[int, Params], None] | None = None,
    patience: int = 3,
) -> list[float]:
    """Shuffled mini-batch Adam.

    The step size halves once the epoch mean loss has stayed above its best
    value for ``patience`` consecutive epochs; a single noisy uptick (common
    with dropout and one batch per epoch) does not count.
    """
    opt = Adam(params, lr=config.lr)
    history: list[float] = []
    best, stale = np.inf, 0
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for b, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start : start + config.batch_size]
            try:
                loss, grads = step_fn(params, idx, rng)
            except NumericalError as exc:
                raise NumericalError(f"{name}: epoch {epoch}, batch {b}: {exc}") from None
            if not np.isfinite(loss):
                raise NumericalError(f"{name}: non-finite loss {loss} at epoch {epoch}, batch {b}")
            opt.step(params, grads)
            total += loss * len(idx)
        history.append(total / n)
        if history[-1] < best:
            best, stale = history[-1], 0
        else:
            stale += 1
            if stale >= patience:
                opt.lr *= 0.5
                stale = 0
        log.debug("%s epoch %d loss %.6f lr %.2e", name, epoch, history[-1], opt.lr)
        if on_epoch is not None:
            on_epoch(epoch, params)
    return history


def gradient_check(
    loss_fn: Callable[[Params], float],
    grads: Params,
    params: Params,
    n_samples: int = 200,
    step: float = 1e-5,
    seed: int = 0,
    floor: float = 1e-7,
) -> float:
    """Max relative error between ``grads`` and central differences of ``loss_fn``.

    Checks a seeded sample of ``n_samples`` scalar parameters drawn uniformly
    across all tensors.  Relative error is ``|a - f| / max(|a|, |f|, floor)``.
    """
    keys = sorted(params)
    sizes = np.array([params[k].size for k in keys])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    rng = np.random.default_rng(seed)
    total = int(offsets[-1])
    picks = rng.choice(total, size=min(n_samples, total), replace=False)
    worst = 0.0
    for flat in picks:
        t = int(np.searchsorted(offsets, flat, side="right") - 1)
        key, pos = keys[t], int(flat - offsets[t])
        arr = params[key].reshape(-1)
        orig = arr[pos]
        arr[pos] = orig + step
        up = loss_fn(params)
        arr[pos] = orig - step
        down = loss_fn(params)
        arr[pos] = orig
        numeric = (up - down) / (2 * step)
        analytic = float(grads[key].reshape(-1)[pos])
        err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)
        worst = max(worst, err)
    return worst

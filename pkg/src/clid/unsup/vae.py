"""Fully connected variational autoencoder over character-id sequences.

Encoder 128 -> 128 -> 64 -> (mu, logvar) with a 2-d latent; decoder
2 -> 64 -> 128 -> 128 with a sigmoid output.  Inputs are the integer ids
divided by the alphabet size.  Loss per sample is the summed squared
reconstruction error plus KL(q(z|x) || N(0, I)); batches use the mean.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from clid.errors import DataError, NumericalError
from clid.nn import Params, TrainConfig, glorot_init, he_init, train_epochs

LATENT = 2
ENC = (128, 64)
DEC = (64, 128)


def init_vae(input_dim: int = 128, seed: int = 42) -> Params:
    rng = np.random.default_rng(seed)
    h1, h2 = ENC
    d1, d2 = DEC
    return {
        "enc_w1": he_init(rng, input_dim, h1), "enc_b1": np.zeros(h1),
        "enc_w2": he_init(rng, h1, h2), "enc_b2": np.zeros(h2),
        "mu_w": glorot_init(rng, h2, LATENT), "mu_b": np.zeros(LATENT),
        "lv_w": glorot_init(rng, h2, LATENT) * 0.1, "lv_b": np.zeros(LATENT),
        "dec_w1": he_init(rng, LATENT, d1), "dec_b1": np.zeros(d1),
        "dec_w2": he_init(rng, d1, d2), "dec_b2": np.zeros(d2),
        "out_w": glorot_init(rng, d2, input_dim), "out_b": np.zeros(input_dim),
    }


def kl_standard_normal(mu: np.ndarray, logvar: np.ndarray) -> np.ndarray:
    """Per-sample KL(N(mu, exp(logvar)) || N(0, I))."""
    return 0.5 * (mu**2 + np.exp(logvar) - 1.0 - logvar).sum(axis=-1)


def encode(p: Params, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    h1 = np.maximum(x @ p["enc_w1"] + p["enc_b1"], 0)
    h2 = np.maximum(h1 @ p["enc_w2"] + p["enc_b2"], 0)
    return h2 @ p["mu_w"] + p["mu_b"], h2 @ p["lv_w"] + p["lv_b"]


def loss_and_grads(p: Params, x: np.ndarray, eps: np.ndarray, parts: bool = False):
    """Batch loss and gradients for inputs ``x`` (already in [0, 1]) and noise ``eps``."""
    n = x.shape[0]
    a1 = x @ p["enc_w1"] + p["enc_b1"]
    h1 = np.maximum(a1, 0)
    a2 = h1 @ p["enc_w2"] + p["enc_b2"]
    h2 = np.maximum(a2, 0)
    mu = h2 @ p["mu_w"] + p["mu_b"]
    logvar = h2 @ p["lv_w"] + p["lv_b"]
    std = np.exp(0.5 * logvar)
    z = mu + std * eps
    a3 = z @ p["dec_w1"] + p["dec_b1"]
    d1 = np.maximum(a3, 0)
    a4 = d1 @ p["dec_w2"] + p["dec_b2"]
    d2 = np.maximum(a4, 0)
    out = 1.0 / (1.0 + np.exp(-(d2 @ p["out_w"] + p["out_b"])))

    rec = ((out - x) ** 2).sum(axis=1)
    kl = kl_standard_normal(mu, logvar)
    loss = float((rec + kl).mean())

    g = {}
    d_out = 2.0 * (out - x) / n
    d_a5 = d_out * out * (1 - out)
    g["out_w"] = d2.T @ d_a5
    g["out_b"] = d_a5.sum(0)
    d_a4 = (d_a5 @ p["out_w"].T) * (a4 > 0)
    g["dec_w2"] = d1.T @ d_a4
    g["dec_b2"] = d_a4.sum(0)
    d_a3 = (d_a4 @ p["dec_w2"].T) * (a3 > 0)
    g["dec_w1"] = z.T @ d_a3
    g["dec_b1"] = d_a3.sum(0)
    d_z = d_a3 @ p["dec_w1"].T
    d_mu = d_z + mu / n
    d_lv = d_z * eps * 0.5 * std + 0.5 * (np.exp(logvar) - 1.0) / n
    g["mu_w"] = h2.T @ d_mu
    g["mu_b"] = d_mu.sum(0)
    g["lv_w"] = h2.T @ d_lv
    g["lv_b"] = d_lv.sum(0)
    d_a2 = (d_mu @ p["mu_w"].T + d_lv @ p["lv_w"].T) * (a2 > 0)
    g["enc_w2"] = h1.T @ d_a2
    g["enc_b2"] = d_a2.sum(0)
    d_a1 = (d_a2 @ p["enc_w2"].T) * (a1 > 0)
    g["enc_w1"] = x.T @ d_a1
    g["enc_b1"] = d_a1.sum(0)
    if parts:
        return loss, g, float(rec.mean()), float(kl.mean())
    return loss, g


@dataclass(frozen=True)
class VaeConfig:
    epochs: int = 30
    lr: float = 1e-3
    batch_size: int = 64
    seed: int = 42


@dataclass(frozen=True)
class VaeModel:
    params: dict
    alphabet_size: int
    config: VaeConfig = VaeConfig()
    history: tuple = field(default=(), compare=False)
    monitor_trace: tuple = field(default=(), compare=False)

    @property
    def seq_len(self) -> int:
        return self.params["enc_w1"].shape[0]

    def scale(self, sequences: np.ndarray) -> np.ndarray:
        return np.asarray(sequences, dtype=float) / self.alphabet_size

    def encode(self, sequences: np.ndarray) -> np.ndarray:
        """Latent means for a batch of id sequences (no sampling)."""
        seqs = np.atleast_2d(sequences)
        if seqs.shape[1] != self.seq_len:
            raise DataError(f"expected sequences of length {self.seq_len}, got {seqs.shape[1]}")
        mu, _ = encode(self.params, self.scale(seqs))
        return mu


def vae_encode(model: VaeModel, sequence: np.ndarray) -> np.ndarray:
    seq = np.asarray(sequence)
    if seq.ndim != 1:
        raise DataError("vae_encode takes a single sequence; use VaeModel.encode for batches")
    return model.encode(seq[None, :])[0]


def fit_vae(sequences: np.ndarray, alphabet_size: int, config: VaeConfig = VaeConfig()) -> VaeModel:
    seqs = np.asarray(sequences)
    n, dim = seqs.shape
    if n < config.batch_size:
        raise DataError(f"need at least batch_size={config.batch_size} sequences, got {n}")
    x = seqs.astype(float) / alphabet_size
    params = init_vae(dim, config.seed)
    rng = np.random.default_rng([config.seed, 1])
    monitor_x = x[: config.batch_size]
    monitor_eps = np.random.default_rng([config.seed, 2]).standard_normal((len(monitor_x), LATENT))
    monitor = [loss_and_grads(params, monitor_x, monitor_eps)[0]]

    def step(p, idx, r):
        eps = r.standard_normal((len(idx), LATENT))
        loss, g, rec, kl = loss_and_grads(p, x[idx], eps, parts=True)
        if not np.isfinite(loss):
            raise NumericalError(f"VAE loss not finite (reconstruction={rec}, kl={kl})")
        return loss, g

    def watch(epoch, p):
        monitor.append(loss_and_grads(p, monitor_x, monitor_eps)[0])

    history = train_epochs(
        params, n, step, TrainConfig(config.lr, config.epochs, config.batch_size, config.seed), rng, "vae", watch
    )
    return VaeModel(params, alphabet_size, config, tuple(history), tuple(monitor))

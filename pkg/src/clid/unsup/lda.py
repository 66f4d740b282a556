"""Latent Dirichlet allocation fitted by collapsed Gibbs sampling."""
from __future__ import annotations

import zlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np

from clid.errors import DataError


@numba.njit(cache=True)
def _sweep(words, docs, z, ndk, nkw, nk, alpha, beta, uniforms):
    K, V = nkw.shape
    vbeta = V * beta
    p = np.empty(K)
    for i in range(words.shape[0]):
        w, d, k = words[i], docs[i], z[i]
        ndk[d, k] -= 1
        nkw[k, w] -= 1
        nk[k] -= 1
        total = 0.0
        for t in range(K):
            total += (ndk[d, t] + alpha) * (nkw[t, w] + beta) / (nk[t] + vbeta)
            p[t] = total
        u = uniforms[i] * total
        k = 0
        while k < K - 1 and p[k] <= u:
            k += 1
        z[i] = k
        ndk[d, k] += 1
        nkw[k, w] += 1
        nk[k] += 1


@numba.njit(cache=True)
def _fold_in(words, phi, alpha, z, uniforms, keep_from):
    K = phi.shape[0]
    n = words.shape[0]
    ndk = np.zeros(K)
    for i in range(n):
        ndk[z[i]] += 1
    acc = np.zeros(K)
    p = np.empty(K)
    sweeps = uniforms.shape[0]
    for s in range(sweeps):
        for i in range(n):
            w = words[i]
            ndk[z[i]] -= 1
            total = 0.0
            for t in range(K):
                total += (ndk[t] + alpha) * phi[t, w]
                p[t] = total
            u = uniforms[s, i] * total
            k = 0
            while k < K - 1 and p[k] <= u:
                k += 1
            z[i] = k
            ndk[k] += 1
        if s >= keep_from:
            for t in range(K):
                acc[t] += (ndk[t] + alpha) / (n + K * alpha)
    return acc / (sweeps - keep_from)


@dataclass(frozen=True)
class LdaConfig:
    iterations: int = 1000
    burn_in: int = 500
    sample_window: int = 100
    min_freq: int = 2
    seed: int = 42
    infer_sweeps: int = 100
    infer_keep: int = 50


@dataclass(frozen=True)
class LdaModel:
    topic_word_counts: np.ndarray
    vocabulary: dict
    alpha: float = 0.1
    beta: float = 0.01
    config: LdaConfig = LdaConfig()
    n_tokens: int = field(default=0, compare=False)

    @property
    def K(self) -> int:
        return self.topic_word_counts.shape[0]

    @property
    def terms(self) -> list[str]:
        return sorted(self.vocabulary, key=self.vocabulary.__getitem__)

    def topic_word(self) -> np.ndarray:
        """Row-normalised topic-term distributions (smoothed by beta)."""
        c = self.topic_word_counts + self.beta
        return c / c.sum(axis=1, keepdims=True)

    def infer(self, doc: Sequence[str]) -> np.ndarray:
        return lda_infer(self, doc)

    def infer_batch(self, docs: Sequence[Sequence[str]]) -> np.ndarray:
        return np.array([lda_infer(self, d) for d in docs]).reshape(len(docs), self.K)


def build_vocabulary(docs: Sequence[Sequence[str]], min_freq: int = 2) -> dict[str, int]:
    counts = Counter(t for d in docs for t in d)
    return {t: i for i, t in enumerate(sorted(t for t, c in counts.items() if c >= min_freq))}


def fit_lda(
    docs: Sequence[Sequence[str]],
    K: int = 4,
    alpha: float = 0.1,
    beta: float = 0.01,
    config: LdaConfig = LdaConfig(),
    on_sweep: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
) -> LdaModel:
    """Collapsed Gibbs over token topics; the returned topic-term counts are
    averaged over the final ``sample_window`` sweeps (never before burn-in).

    ``on_sweep(i, doc_topic_counts, topic_word_counts)`` runs after every sweep.
    """
    if len(docs) < K:
        raise DataError(f"LDA needs at least K={K} documents, got {len(docs)}")
    vocab = build_vocabulary(docs, config.min_freq)
    if not vocab:
        raise DataError(f"empty LDA vocabulary after pruning terms seen fewer than {config.min_freq} times")
    ids = [[vocab[t] for t in d if t in vocab] for d in docs]
    words = np.array([w for d in ids for w in d], dtype=np.int64)
    doc_of = np.array([i for i, d in enumerate(ids) for _ in d], dtype=np.int64)
    rng = np.random.default_rng(config.seed)
    z = rng.integers(K, size=words.size).astype(np.int64)
    ndk = np.zeros((len(docs), K), dtype=np.int64)
    nkw = np.zeros((K, len(vocab)), dtype=np.int64)
    np.add.at(ndk, (doc_of, z), 1)
    np.add.at(nkw, (z, words), 1)
    nk = nkw.sum(axis=1)
    start = max(config.burn_in, config.iterations - config.sample_window)
    acc = np.zeros((K, len(vocab)))
    kept = 0
    for it in range(config.iterations):
        _sweep(words, doc_of, z, ndk, nkw, nk, alpha, beta, rng.random(words.size))
        if on_sweep is not None:
            on_sweep(it, ndk, nkw)
        if it >= start:
            acc += nkw
            kept += 1
    counts = acc / kept if kept else nkw.astype(float)
    return LdaModel(counts, vocab, alpha, beta, config, int(words.size))


def _doc_seed(seed: int, doc: Sequence[str]) -> list[int]:
    return [seed, zlib.crc32("\x1f".join(doc).encode("utf-8"))]


def lda_infer(model: LdaModel, doc: Sequence[str]) -> np.ndarray:
    """Topic proportions for one document by fold-in Gibbs against frozen topics.

    Unknown tokens are skipped; an empty or all-unknown document gets the
    uniform vector.  Seeded by the model seed and the document text, so the
    result does not depend on batch position.
    """
    K = model.K
    words = np.array([model.vocabulary[t] for t in doc if t in model.vocabulary], dtype=np.int64)
    if words.size == 0:
        return np.full(K, 1.0 / K)
    cfg = model.config
    rng = np.random.default_rng(_doc_seed(cfg.seed, doc))
    z = rng.integers(K, size=words.size).astype(np.int64)
    uniforms = rng.random((cfg.infer_sweeps, words.size))
    theta = _fold_in(words, model.topic_word(), model.alpha, z, uniforms, cfg.infer_sweeps - cfg.infer_keep)
    return theta / theta.sum()


def lda_top_terms(model: LdaModel, topic: int, n: int) -> list[str]:
    if not 0 <= topic < model.K:
        raise DataError(f"topic must lie in [0, {model.K}), got {topic}")
    probs = model.topic_word()[topic]
    terms = model.terms
    ranked = sorted(range(len(terms)), key=lambda i: (-probs[i], terms[i]))
    return [terms[i] for i in ranked[: max(n, 0)]]

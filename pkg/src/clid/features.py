"""Deterministic feature extraction: character ids, character n-grams, text
statistics, word n-gram tokens, min-max scaling and PCA."""
from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from clid.errors import DataError

PAD_ID = 0
UNK_ID = 1
MAX_LEN = 128
NGRAM_RANGE = (1, 3)
MAX_FEATURES = 3000
VOWELS = frozenset("aeiouwy")
STAT_NAMES = ("avg_word_len", "avg_consonants")


@dataclass(frozen=True)
class Alphabet:
    char_to_id: dict

    pad_id = PAD_ID
    unk_id = UNK_ID

    @classmethod
    def fit(cls, texts: Iterable[str]) -> "Alphabet":
        chars = sorted(set().union(*map(set, texts)))
        return cls({c: i + 2 for i, c in enumerate(chars)})

    @property
    def size(self) -> int:
        """Number of ids, including pad and unk."""
        return len(self.char_to_id) + 2


def encode_chars(text: str, alphabet: Alphabet, max_len: int = MAX_LEN) -> np.ndarray:
    out = np.full(max_len, PAD_ID, dtype=np.int64)
    ids = [alphabet.char_to_id.get(c, UNK_ID) for c in text[:max_len]]
    out[: len(ids)] = ids
    return out


def encode_batch(texts: Sequence[str], alphabet: Alphabet, max_len: int = MAX_LEN) -> np.ndarray:
    out = np.zeros((len(texts), max_len), dtype=np.int64)
    for i, t in enumerate(texts):
        out[i] = encode_chars(t, alphabet, max_len)
    return out


@dataclass(frozen=True)
class NgramVocab:
    ngram_to_col: dict
    n_range: tuple[int, int] = NGRAM_RANGE
    max_features: int = MAX_FEATURES

    def __len__(self) -> int:
        return len(self.ngram_to_col)

    @property
    def ngrams(self) -> list[str]:
        return sorted(self.ngram_to_col, key=self.ngram_to_col.__getitem__)


def _char_ngrams(text: str, n_min: int, n_max: int) -> Iterable[str]:
    for n in range(n_min, n_max + 1):
        for i in range(len(text) - n + 1):
            yield text[i : i + n]


def fit_ngram_vocab(
    texts: Sequence[str], n_range: tuple[int, int] = NGRAM_RANGE, max_features: int = MAX_FEATURES
) -> NgramVocab:
    """Keep the ``max_features`` most frequent character n-grams (ties lexicographic)."""
    if len(texts) == 0:
        raise DataError("cannot fit an n-gram vocabulary on an empty corpus")
    n_min, n_max = n_range
    counts: Counter[str] = Counter()
    for t in texts:
        counts.update(_char_ngrams(t, n_min, n_max))
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:max_features]
    return NgramVocab({g: j for j, (g, _) in enumerate(ranked)}, (n_min, n_max), max_features)


def vectorize_ngrams(text: str, vocab: NgramVocab) -> np.ndarray:
    """Raw in-vocabulary n-gram counts for one text."""
    out = np.zeros(len(vocab))
    cols = vocab.ngram_to_col
    for g in _char_ngrams(text, *vocab.n_range):
        j = cols.get(g)
        if j is not None:
            out[j] += 1
    return out


def ngram_matrix(texts: Sequence[str], vocab: NgramVocab) -> np.ndarray:
    out = np.zeros((len(texts), len(vocab)))
    for i, t in enumerate(texts):
        out[i] = vectorize_ngrams(t, vocab)
    return out


@dataclass(frozen=True)
class TextStats:
    avg_word_len: float
    avg_consonants: float


def is_vowel(ch: str) -> bool:
    base = unicodedata.normalize("NFD", ch)[:1]
    return base in VOWELS


def text_stats(text: str) -> TextStats:
    words = text.split()
    if not words:
        return TextStats(0.0, 0.0)
    letters = sum(len(w) for w in words)
    consonants = sum(1 for w in words for c in w if c.isalpha() and not is_vowel(c))
    return TextStats(letters / len(words), consonants / len(words))


def word_ngrams(text: str) -> list[str]:
    """Unigrams followed by ``_``-joined adjacent bigrams, in order of occurrence."""
    words = text.split()
    return words + [f"{a}_{b}" for a, b in zip(words, words[1:])]


def stat_matrix(texts: Sequence[str], vocab: NgramVocab, with_stats: bool = True) -> np.ndarray:
    """Unscaled ``[n-gram counts | avg_word_len | avg_consonants]`` rows."""
    grams = ngram_matrix(texts, vocab)
    if not with_stats:
        return grams
    stats = np.array([[s.avg_word_len, s.avg_consonants] for s in map(text_stats, texts)]).reshape(-1, 2)
    return np.hstack([grams, stats])


def escape_ngram(g: str) -> str:
    return "ng:" + g.replace("\\", "\\\\").replace(" ", "\\s")


def feature_names(vocab: NgramVocab, with_stats: bool = True) -> list[str]:
    names = [escape_ngram(g) for g in vocab.ngrams]
    return names + list(STAT_NAMES) if with_stats else names


@dataclass(frozen=True)
class MinMaxScaler:
    lo: np.ndarray
    span: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "MinMaxScaler":
        lo = X.min(axis=0)
        span = X.max(axis=0) - lo
        span = np.where(span > 0, span, 1.0)
        return cls(lo, span)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.lo) / self.span


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    @property
    def k(self) -> int:
        return self.components.shape[0]

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.mean.shape[0]:
            raise DataError(f"expected {self.mean.shape[0]} features, got {X.shape[-1]}")
        return (X - self.mean) @ self.components.T

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z) @ self.components + self.mean


def fit_pca(X: np.ndarray, k: int) -> PcaModel:
    """Principal components of the sample covariance (ddof=1).

    Each component is sign-normalised so its largest-magnitude entry is positive.
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if n < 2:
        raise DataError("PCA needs at least 2 rows")
    if not 1 <= k <= min(n, d):
        raise DataError(f"k={k} must lie in [1, min(rows, cols)={min(n, d)}]")
    mean = X.mean(axis=0)
    Xc = X - mean
    if d <= n:
        vals, vecs = np.linalg.eigh(Xc.T @ Xc / (n - 1))
        order = np.argsort(vals)[::-1][:k]
        var, comps = vals[order], vecs[:, order].T
    else:
        _, s, vt = np.linalg.svd(Xc, full_matrices=False)
        var, comps = s[:k] ** 2 / (n - 1), vt[:k]
    var = np.maximum(var, 0.0)
    pivot = np.abs(comps).argmax(axis=1)
    signs = np.sign(comps[np.arange(k), pivot])
    comps = comps * np.where(signs == 0, 1.0, signs)[:, None]
    return PcaModel(mean, comps, var)


def pca_transform(model: PcaModel, x: np.ndarray) -> np.ndarray:
    return model.transform(x)

"""Feature-set assembly: fit every extractor a feature set needs on unlabelled
training text, then turn any text list into the classifier input matrix."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from clid.errors import ConfigError
from clid.features import (
    MAX_FEATURES,
    NGRAM_RANGE,
    Alphabet,
    MinMaxScaler,
    NgramVocab,
    encode_batch,
    feature_names,
    fit_ngram_vocab,
    stat_matrix,
    word_ngrams,
)
from clid.unsup.ensemble import MEMBERS, N_CLUSTERS, ClusterEnsemble, fit_ensemble
from clid.unsup.lda import LdaConfig, LdaModel, fit_lda
from clid.unsup.vae import LATENT, VaeConfig, VaeModel, fit_vae

FEATURE_SETS = (
    "chars", "ngram", "ngram+stats", "clusters", "vae", "lda", "clusters+ngram", "vae+ngram", "lda+ngram",
)
UNSUP_BLOCKS = ("clusters", "vae", "lda")


def blocks(feature_set: str) -> tuple[str, ...]:
    if feature_set not in FEATURE_SETS:
        raise ConfigError(f"unknown feature set {feature_set!r}; choose from {', '.join(FEATURE_SETS)}")
    return tuple(feature_set.split("+"))


def _config(cls, overrides: Mapping | None):
    if not overrides:
        return cls()
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(overrides) - names
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} option(s): {', '.join(sorted(unknown))}")
    return cls(**overrides)


@dataclass(frozen=True)
class FeaturePipeline:
    feature_set: str
    alphabet: Alphabet | None = None
    vocab: NgramVocab | None = None
    scaler: MinMaxScaler | None = None
    ensemble: ClusterEnsemble | None = None
    vae: VaeModel | None = None
    lda: LdaModel | None = None
    sequence_ids: bool = False

    def _stat(self, texts: Sequence[str]) -> np.ndarray:
        return self.scaler.transform(stat_matrix(texts, self.vocab, with_stats=True))

    def transform(self, texts: Sequence[str]) -> np.ndarray:
        texts = list(texts)
        parts = []
        stat = self._stat(texts) if self.vocab is not None else None
        for block in blocks(self.feature_set):
            if block == "chars":
                ids = encode_batch(texts, self.alphabet)
                parts.append(ids if self.sequence_ids else ids / self.alphabet.size)
            elif block == "ngram":
                parts.append(stat[:, : len(self.vocab)])
            elif block == "stats":
                parts.append(stat[:, len(self.vocab) :])
            elif block == "clusters":
                parts.append(self.ensemble.features(stat))
            elif block == "vae":
                parts.append(self.vae.encode(encode_batch(texts, self.alphabet)))
            elif block == "lda":
                parts.append(self.lda.infer_batch([word_ngrams(t) for t in texts]))
        return parts[0] if len(parts) == 1 else np.hstack(parts)

    def names(self) -> list[str]:
        out: list[str] = []
        for block in blocks(self.feature_set):
            if block == "chars":
                out += [f"char{i}" for i in range(128)]
            elif block == "ngram":
                out += feature_names(self.vocab, with_stats=False)
            elif block == "stats":
                out += feature_names(self.vocab)[len(self.vocab) :]
            elif block == "clusters":
                out += [f"{m}={c}" for m in MEMBERS for c in range(N_CLUSTERS)]
            elif block == "vae":
                out += [f"vae_z{i}" for i in range(LATENT)]
            elif block == "lda":
                out += [f"lda_topic{i}" for i in range(self.lda.K)]
        return out


def fit_pipeline(
    texts: Sequence[str],
    feature_set: str,
    seeds: Mapping[str, int] | None = None,
    hyper: Mapping[str, Mapping] | None = None,
    sequence_ids: bool = False,
) -> FeaturePipeline:
    """Fit the extractors for ``feature_set`` on unlabelled ``texts``."""
    seeds = dict(seeds or {})
    hyper = dict(hyper or {})
    parts = blocks(feature_set)
    texts = tuple(texts)
    alphabet = vocab = scaler = ensemble = vae = lda = None
    if "chars" in parts or "vae" in parts:
        alphabet = Alphabet.fit(texts)
    if {"ngram", "stats", "clusters"} & set(parts):
        ng = dict(hyper.get("ngram", {}))
        n_range = tuple(ng.pop("n_range", NGRAM_RANGE))
        max_features = ng.pop("max_features", MAX_FEATURES)
        if ng:
            raise ConfigError(f"unknown ngram option(s): {', '.join(sorted(ng))}")
        vocab = fit_ngram_vocab(texts, n_range, max_features)
        raw = stat_matrix(texts, vocab, with_stats=True)
        scaler = MinMaxScaler.fit(raw)
        if "clusters" in parts:
            cl = dict(hyper.get("clusters", {}))
            threshold = cl.pop("birch_threshold", 0.25)
            if cl:
                raise ConfigError(f"unknown clusters option(s): {', '.join(sorted(cl))}")
            ensemble = fit_ensemble(scaler.transform(raw), seeds.get("clusters", 42), threshold)
    if "vae" in parts:
        cfg = _config(VaeConfig, {"seed": seeds.get("vae", 42), **hyper.get("vae", {})})
        vae = fit_vae(encode_batch(texts, alphabet), alphabet.size, cfg)
    if "lda" in parts:
        lh = dict(hyper.get("lda", {}))
        alpha = lh.pop("alpha", 0.1)
        beta = lh.pop("beta", 0.01)
        cfg = _config(LdaConfig, {"seed": seeds.get("lda", 42), **lh})
        lda = fit_lda([word_ngrams(t) for t in texts], 4, alpha, beta, cfg)
    return FeaturePipeline(feature_set, alphabet, vocab, scaler, ensemble, vae, lda, sequence_ids)

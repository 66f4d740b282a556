"""Experiment orchestration.

One cell runs a fixed pipeline: split, fit every feature extractor on the
unlabelled training text, subsample the training labels, train the
classifier on that subsample, and score it on the untouched test split.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import sys
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from clid import __version__
from clid.classify import CnnConfig, NnConfig, SvmConfig, train_cnn, train_nn, train_svm
from clid.corpus import (
    DEFAULT_SEED,
    LabelBudget,
    LabeledCorpus,
    SplitSpec,
    deduplicate,
    load_corpus,
    preprocess,
    split,
    subsample_labels,
)
from clid.errors import ClidError, ConfigError, DataError
from clid.eval import EvalReport, evaluate, render_confusion, render_report
from clid.pipeline import FEATURE_SETS, FeaturePipeline, _config, fit_pipeline
from clid.synthetic import generate_synthetic

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

MODELS = ("svm", "nn", "cnn")
COMPONENTS = ("split", "budget", "clusters", "vae", "lda", "svm", "nn", "cnn")
HYPER_SECTIONS = ("ngram", "clusters", "vae", "lda", "svm", "nn", "cnn")
_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(master: int, component: str) -> int:
    """Per-component seed; depends only on the master seed and the component name."""
    return splitmix64((master ^ (zlib.crc32(component.encode()) << 32)) & _MASK64) >> 1


def validate_combo(features: str, model: str) -> None:
    if model not in MODELS:
        raise ConfigError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")
    if features not in FEATURE_SETS:
        raise ConfigError(f"unknown feature set {features!r}; choose from {', '.join(FEATURE_SETS)}")
    if model == "cnn" and features != "chars":
        raise ConfigError(f"cnn only accepts the chars feature set, not {features!r}")
    if features == "chars" and model == "svm":
        raise ConfigError("the chars feature set needs a sequence model (nn or cnn), not svm")


@dataclass(frozen=True)
class CorpusSource:
    path: str | None = None
    synthetic_seed: int = 7
    synthetic_per_class: int = 400
    synthetic_avg_len: float = 15
    deduplicate: bool = True

    def load(self) -> LabeledCorpus:
        if self.path:
            corpus, report = load_corpus(self.path)
            log.info("%s", report)
        else:
            corpus = generate_synthetic(self.synthetic_seed, self.synthetic_per_class, self.synthetic_avg_len)
        return deduplicate(corpus) if self.deduplicate else corpus


@dataclass(frozen=True)
class ExperimentConfig:
    corpus: CorpusSource = CorpusSource()
    features: str = "ngram"
    model: str = "nn"
    label_fraction: float = 1.0
    train_fraction: float = 0.8
    stratified: bool = True
    seed: int = DEFAULT_SEED
    seeds: Mapping[str, int] = field(default_factory=dict)
    hyper: Mapping[str, Mapping[str, Any]] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        validate_combo(self.features, self.model)
        if not 0 < self.label_fraction <= 1:
            raise ConfigError(f"label_fraction must lie in (0, 1], got {self.label_fraction}")
        if not 0 < self.train_fraction < 1:
            raise ConfigError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        unknown_hyper = set(self.hyper) - set(HYPER_SECTIONS)
        if unknown_hyper:
            raise ConfigError(f"unknown hyperparameter section(s): {', '.join(sorted(unknown_hyper))}")
        unknown = set(self.seeds) - set(COMPONENTS)
        if unknown:
            raise ConfigError(f"unknown seed component(s): {', '.join(sorted(unknown))}")

    def component_seed(self, component: str) -> int:
        return int(self.seeds.get(component, derive_seed(self.seed, component)))

    @property
    def split_spec(self) -> SplitSpec:
        return SplitSpec(self.train_fraction, self.component_seed("split"), self.stratified)

    @property
    def budget(self) -> LabelBudget:
        return LabelBudget(self.label_fraction, self.component_seed("budget"))

    def label(self) -> str:
        return self.name or f"{self.model}:{self.features}@{self.label_fraction:g}"

    def to_dict(self) -> dict:
        return json.loads(json.dumps(dataclasses.asdict(self), sort_keys=True))


@dataclass(frozen=True)
class TrainedModel:
    """Feature pipeline plus classifier; what ``clid train`` writes to disk."""

    pipeline: FeaturePipeline
    classifier: Any
    meta: dict = field(default_factory=dict)

    def predict_texts(self, texts: Sequence[str]) -> np.ndarray:
        cleaned = [preprocess(t) for t in texts]
        return self.classifier.predict(self.pipeline.transform(cleaned))


def train_classifier(model: str, X: np.ndarray, y: np.ndarray, seed: int, hyper: Mapping | None = None, vocab_size: int = 0):
    hyper = dict(hyper or {})
    if model == "svm":
        return train_svm(X, y, _config(SvmConfig, {"seed": seed, **hyper}))
    if model == "nn":
        return train_nn(X, y, _config(NnConfig, {"seed": seed, **hyper}))
    if model == "cnn":
        return train_cnn(X, y, vocab_size, _config(CnnConfig, {"seed": seed, **hyper}))
    raise ConfigError(f"unknown model {model!r}")


def fit_cell(config: ExperimentConfig, corpus: LabeledCorpus | None = None):
    """Run one cell; returns ``(report, trained_model)``."""
    corpus = config.corpus.load() if corpus is None else corpus
    # (1) split
    train, test = split(corpus, config.split_spec)
    test_hash = test.content_hash()
    # (2) extractors see only unlabelled training text
    seeds = {c: config.component_seed(c) for c in ("clusters", "vae", "lda")}
    pipeline = fit_pipeline(train.unlabeled(), config.features, seeds, config.hyper, sequence_ids=config.model == "cnn")
    # (3) label budget touches classifier rows only
    labelled = subsample_labels(train, config.budget)
    # (4) classifier
    X = pipeline.transform(labelled.texts)
    vocab_size = pipeline.alphabet.size if pipeline.alphabet is not None else 0
    clf = train_classifier(
        config.model, X, labelled.labels, config.component_seed(config.model), config.hyper.get(config.model), vocab_size
    )
    # (5) evaluation on the untouched test split
    if test.content_hash() != test_hash:
        raise DataError("test split changed between splitting and evaluation")
    pred = clf.predict(pipeline.transform(test.texts))
    report = evaluate(
        test.labels,
        pred,
        model=config.model,
        features=config.features,
        label_fraction=config.label_fraction,
        seed=config.seed,
        cell=config.label(),
        test_hash=test_hash,
        test_hash_at_eval=test.content_hash(),
        train_rows=len(train),
        labelled_rows=len(labelled),
        test_rows=len(test),
    )
    meta = {"config": config.to_dict(), "test_hash": test_hash}
    return report, TrainedModel(pipeline, clf, meta)


def run_experiment(config: ExperimentConfig, corpus: LabeledCorpus | None = None) -> EvalReport:
    return fit_cell(config, corpus)[0]


def _run_cell_safe(config: ExperimentConfig) -> dict:
    try:
        return {"status": "ok", "report": run_experiment(config).to_dict()}
    except ClidError as exc:
        return {"status": "failed", "error": f"{type(exc).__name__}: {exc}"}


@dataclass(frozen=True)
class ReportBundle:
    cells: tuple
    configs: tuple
    fingerprint: dict

    @property
    def reports(self) -> list[EvalReport]:
        return [EvalReport.from_dict(c["report"]) for c in self.cells if c["status"] == "ok"]

    def to_json(self) -> str:
        body = {"fingerprint": self.fingerprint, "cells": [{"cell": cfg.label(), **c} for cfg, c in zip(self.configs, self.cells)]}
        return json.dumps(body, indent=2, sort_keys=True) + "\n"

    def table(self) -> str:
        groups: dict[tuple, list[EvalReport]] = {}
        for r in self.reports:
            groups.setdefault((r.meta["model"], r.meta["label_fraction"]), []).append(r)
        sections = []
        for (model, frac), reps in groups.items():
            title = f"{model.upper()} results (labels: {frac:.0%} of training set)"
            body = render_report(
                [EvalReport(r.cm, {**r.meta, "model": "", "label_fraction": None}) for r in reps], "table"
            )
            sections.append(f"{title}\n{body}")
        failed = [f"FAILED {cfg.label()}: {c['error']}" for cfg, c in zip(self.configs, self.cells) if c["status"] != "ok"]
        return "\n\n".join(sections + failed)

    def confusion_panel(self, labels: Sequence[str]) -> str:
        chosen = [
            EvalReport.from_dict(c["report"])
            for cfg, c in zip(self.configs, self.cells)
            if c["status"] == "ok" and cfg.label() in labels
        ]
        return render_confusion(chosen) if chosen else ""


def fingerprint(configs: Sequence[ExperimentConfig]) -> dict:
    blob = json.dumps([c.to_dict() for c in configs], sort_keys=True).encode()
    return {
        "version": __version__,
        "seeds": sorted({c.seed for c in configs}),
        "config_hash": hashlib.sha256(blob).hexdigest(),
    }


def grid_workers(n_cells: int) -> int:
    cap = os.environ.get("CLID_THREADS")
    limit = int(cap) if cap and cap.isdigit() and int(cap) > 0 else (os.cpu_count() or 1)
    return max(1, min(limit, n_cells))


def run_grid(configs: Sequence[ExperimentConfig]) -> ReportBundle:
    """Run every cell in isolation; a failing cell is marked and the rest continue."""
    configs = tuple(configs)
    workers = grid_workers(len(configs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_cell_safe, configs))
    else:
        cells = [_run_cell_safe(c) for c in configs]
    return ReportBundle(tuple(cells), configs, fingerprint(configs))


# -- grid definitions ---------------------------------------------------------

TABLE_ROWS = ("ngram", "ngram+stats", "clusters", "vae", "lda", "clusters+ngram", "vae+ngram", "lda+ngram")
REDUCED_ROWS = ("clusters+ngram", "vae+ngram", "lda+ngram", "ngram")


def standard_grid(base: ExperimentConfig | None = None) -> list[ExperimentConfig]:
    """Every classifier/feature/label-budget cell of the published comparison."""
    base = base or ExperimentConfig()
    cells = [dataclasses.replace(base, model=m, features="chars", label_fraction=1.0, name="") for m in ("nn", "cnn")]
    for model in ("svm", "nn"):
        cells += [dataclasses.replace(base, model=model, features=f, label_fraction=1.0, name="") for f in TABLE_ROWS]
    for model in ("svm", "nn"):
        cells += [dataclasses.replace(base, model=model, features=f, label_fraction=0.3, name="") for f in REDUCED_ROWS]
    return cells


_CELL_KEYS = {"model", "features", "label_fraction", "seed", "seeds", "hyper", "confusion"}


def _merge_hyper(a: Mapping, b: Mapping) -> dict:
    out = {k: dict(v) for k, v in a.items()}
    for k, v in b.items():
        out.setdefault(k, {}).update(v)
    return out


def parse_config(data: Mapping, base_dir: Path | None = None) -> tuple[list[ExperimentConfig], list[str]]:
    """Build grid cells from a parsed TOML mapping; returns ``(cells, confusion_cell_labels)``."""
    data = dict(data)
    known = {"corpus_path", "synthetic", "deduplicate", "seed", "seeds", "split", "hyper", "grid"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    path = data.get("corpus_path")
    if path and base_dir is not None and not Path(path).is_absolute():
        path = str(base_dir / path)
    syn = dict(data.get("synthetic", {}))
    if not path and not syn:
        raise ConfigError("config needs corpus_path or a [synthetic] table")
    try:
        source = CorpusSource(
            path=path,
            synthetic_seed=syn.pop("seed", 7),
            synthetic_per_class=syn.pop("per_class", 400),
            synthetic_avg_len=syn.pop("avg_len", 15),
            deduplicate=data.get("deduplicate", True),
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    if syn:
        raise ConfigError(f"unknown synthetic option(s): {', '.join(sorted(syn))}")
    sp = dict(data.get("split", {}))
    split_seed = sp.pop("seed", None)
    base = dict(
        corpus=source,
        train_fraction=sp.pop("train_fraction", 0.8),
        stratified=sp.pop("stratified", True),
        seed=data.get("seed", DEFAULT_SEED),
        seeds=dict(data.get("seeds", {})),
        hyper=dict(data.get("hyper", {})),
    )
    if sp:
        raise ConfigError(f"unknown split option(s): {', '.join(sorted(sp))}")
    if split_seed is not None:
        base["seeds"] = {**base["seeds"], "split": split_seed}
    template = ExperimentConfig(**base)
    grid = data.get("grid")
    if not grid:
        return standard_grid(template), []
    cells, confusion = [], []
    for name, cell in grid.items():
        if not isinstance(cell, Mapping):
            raise ConfigError(f"grid entry {name!r} must be a table")
        extra = set(cell) - _CELL_KEYS
        if extra:
            raise ConfigError(f"grid cell {name!r}: unknown key(s) {', '.join(sorted(extra))}")
        cfg = dataclasses.replace(
            template,
            name=name,
            model=cell.get("model", "nn"),
            features=cell.get("features", "ngram"),
            label_fraction=cell.get("label_fraction", 1.0),
            seed=cell.get("seed", template.seed),
            seeds={**template.seeds, **cell.get("seeds", {})},
            hyper=_merge_hyper(template.hyper, cell.get("hyper", {})),
        )
        cells.append(cfg)
        if cell.get("confusion"):
            confusion.append(cfg.label())
    return cells, confusion


def load_config(path: str | Path) -> tuple[list[ExperimentConfig], list[str]]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data, path.parent)

"""Labelled sentence corpora: cleaning, loading, deduplication, splits and stats."""
from __future__ import annotations

import enum
import hashlib
import json
import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_DOWN, Decimal
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from clid.errors import DataError

DEFAULT_SEED = 42


class Language(enum.IntEnum):
    """The four classes, in confusion-matrix order."""

    WELSH = 0
    ENGLISH = 1
    IRISH = 2
    SCOTTISH = 3

    @property
    def code(self) -> str:
        return _CODES[self]

    @property
    def key(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, token: str) -> "Language":
        t = token.strip().lower()
        if t in _BY_CODE:
            return _BY_CODE[t]
        try:
            return cls[t.upper()]
        except KeyError:
            raise DataError(f"unknown label {token!r}") from None


_CODES = {Language.WELSH: "cy", Language.ENGLISH: "en", Language.IRISH: "ga", Language.SCOTTISH: "gd"}
_BY_CODE = {v: k for k, v in _CODES.items()}
LANGUAGES = tuple(Language)

_SPACE_RUN = re.compile(r"\s+")


def preprocess(text: str) -> str:
    """Lowercase and keep only letters and single spaces.

    Digits, punctuation, apostrophes, hyphens and symbols are deleted (not
    replaced by spaces), so ``"saor-dhaoine"`` becomes ``"saordhaoine"``.
    """
    text = unicodedata.normalize("NFC", text.lower())
    kept = "".join(ch if ch.isalpha() else " " if ch.isspace() else "" for ch in text)
    return _SPACE_RUN.sub(" ", kept).strip()


@dataclass(frozen=True)
class LabeledSample:
    text: str
    label: Language
    source_id: str = ""


@dataclass(frozen=True)
class LabeledCorpus:
    samples: tuple[LabeledSample, ...] = ()
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if not isinstance(self.samples, tuple):
            object.__setattr__(self, "samples", tuple(self.samples))

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    @property
    def texts(self) -> list[str]:
        return [s.text for s in self.samples]

    @property
    def labels(self) -> np.ndarray:
        return np.array([int(s.label) for s in self.samples], dtype=np.int64)

    @property
    def class_counts(self) -> dict[Language, int]:
        counts = Counter(s.label for s in self.samples)
        return {lang: counts.get(lang, 0) for lang in LANGUAGES}

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for s in self.samples:
            h.update(f"{int(s.label)}\t{s.text}\n".encode("utf-8"))
        return h.hexdigest()

    def unlabeled(self) -> tuple[str, ...]:
        """Label-free view handed to unsupervised fitting."""
        return tuple(s.text for s in self.samples)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = DEFAULT_SEED
    stratified: bool = True

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


@dataclass(frozen=True)
class LabelBudget:
    fraction: float = 1.0
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not 0 < self.fraction <= 1:
            raise ValueError(f"label fraction must lie in (0, 1], got {self.fraction}")


@dataclass(frozen=True)
class LoadReport:
    path: str
    loaded: int
    dropped: int
    comments: int

    def __str__(self) -> str:
        return f"{self.path}: loaded: {self.loaded}, dropped: {self.dropped}"


def parse_lines(lines: Iterable[str], source: str = "<input>") -> tuple[LabeledCorpus, LoadReport]:
    samples = []
    dropped = comments = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if line.startswith("#"):
            comments += 1
            continue
        if not line.strip():
            continue
        if "\t" not in line:
            raise DataError(f"malformed line {lineno}: expected 'label<TAB>text'")
        token, text = line.split("\t", 1)
        try:
            label = Language.parse(token)
        except DataError:
            raise DataError(f"unknown label {token!r} at line {lineno}") from None
        cleaned = preprocess(text)
        if not cleaned:
            dropped += 1
            continue
        samples.append(LabeledSample(cleaned, label, f"{source}:{lineno}"))
    report = LoadReport(source, len(samples), dropped, comments)
    return LabeledCorpus(tuple(samples), {"source": source}), report


def load_corpus(path: str | Path, format: str = "tsv") -> tuple[LabeledCorpus, LoadReport]:
    """Read a ``label<TAB>text`` file; returns the cleaned corpus and a load report."""
    if format != "tsv":
        raise DataError(f"unsupported corpus format {format!r}")
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    with path.open(encoding="utf-8") as fh:
        return parse_lines(fh, str(path))


def save_corpus(corpus: LabeledCorpus, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for s in corpus:
            fh.write(f"{s.label.code}\t{s.text}\n")


def deduplicate(corpus: LabeledCorpus) -> LabeledCorpus:
    seen: set[str] = set()
    kept = []
    for s in corpus:
        if s.text not in seen:
            seen.add(s.text)
            kept.append(s)
    return LabeledCorpus(tuple(kept), dict(corpus.meta))


def _trunc2(x: float) -> float:
    # the published averages are truncated, not rounded (17.319 -> 17.31)
    return float(Decimal(repr(x)).quantize(Decimal("0.01"), rounding=ROUND_DOWN))


@dataclass(frozen=True)
class ClassStats:
    sentences: int
    unique_sentences: int
    words: int

    @property
    def avg_words_per_sentence(self) -> float:
        return _trunc2(self.words / self.sentences) if self.sentences else 0.0


@dataclass(frozen=True)
class StatsReport:
    per_class: dict[Language, ClassStats]
    total: ClassStats

    def to_dict(self) -> dict:
        rows = {"total": self.total}
        order = (Language.IRISH, Language.SCOTTISH, Language.WELSH, Language.ENGLISH)
        rows.update({lang.key: self.per_class[lang] for lang in order})
        return {
            k: {
                "sentences": v.sentences,
                "unique_sentences": v.unique_sentences,
                "words": v.words,
                "avg_words_per_sentence": v.avg_words_per_sentence,
            }
            for k, v in rows.items()
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self) -> str:
        d = self.to_dict()
        cols = list(d)
        rows = [
            ("Sentences", "sentences", "{:,}"),
            ("Unique sentences", "unique_sentences", "{:,}"),
            ("Words", "words", "{:,}"),
            ("Average words/sentence", "avg_words_per_sentence", "{:.2f}"),
        ]
        cells = [[""] + [c.capitalize() for c in cols]]
        for title, key, fmt in rows:
            cells.append([title] + [fmt.format(d[c][key]) for c in cols])
        widths = [max(len(r[i]) for r in cells) for i in range(len(cells[0]))]
        lines = []
        for r in cells:
            first = r[0].rjust(widths[0])
            rest = [v.rjust(w) for v, w in zip(r[1:], widths[1:])]
            lines.append("  ".join([first, *rest]))
        return "\n".join(lines)


def corpus_stats(corpus: LabeledCorpus) -> StatsReport:
    per_class = {}
    for lang in LANGUAGES:
        texts = [s.text for s in corpus if s.label == lang]
        per_class[lang] = ClassStats(len(texts), len(set(texts)), sum(len(t.split()) for t in texts))
    total = ClassStats(
        sum(c.sentences for c in per_class.values()),
        sum(c.unique_sentences for c in per_class.values()),
        sum(c.words for c in per_class.values()),
    )
    return StatsReport(per_class, total)


def _floor_share(fraction: float, n: int) -> int:
    # guards against 0.3 * 10 == 3.0000000000000004 style drift in both directions
    return min(n, math.floor(fraction * n + 1e-9))


def _take(corpus: LabeledCorpus, idx: Sequence[int]) -> LabeledCorpus:
    return LabeledCorpus(tuple(corpus.samples[i] for i in sorted(idx)), dict(corpus.meta))


def split(corpus: LabeledCorpus, spec: SplitSpec = SplitSpec()) -> tuple[LabeledCorpus, LabeledCorpus]:
    """Seeded train/test split; per-class train size is floor(fraction * class size)."""
    labels = corpus.labels
    rng = np.random.default_rng(spec.seed)
    for lang, n in corpus.class_counts.items():
        if 0 < n < 2:
            raise DataError(f"class {lang.key} has {n} sample(s); at least 2 are required to split")
    if spec.stratified:
        train_idx = []
        for lang in LANGUAGES:
            members = np.flatnonzero(labels == int(lang))
            if members.size == 0:
                continue
            perm = rng.permutation(members)
            train_idx.extend(perm[: _floor_share(spec.train_fraction, members.size)].tolist())
    else:
        perm = rng.permutation(len(corpus))
        train_idx = perm[: _floor_share(spec.train_fraction, len(corpus))].tolist()
    chosen = set(train_idx)
    test_idx = [i for i in range(len(corpus)) if i not in chosen]
    return _take(corpus, train_idx), _take(corpus, test_idx)


def subsample_labels(train: LabeledCorpus, budget: LabelBudget = LabelBudget()) -> LabeledCorpus:
    """Stratified per-class floor(fraction * class size) subset of the training rows."""
    if budget.fraction == 1:
        return train
    labels = train.labels
    rng = np.random.default_rng(budget.seed)
    keep = []
    for lang in LANGUAGES:
        members = np.flatnonzero(labels == int(lang))
        if members.size == 0:
            continue
        perm = rng.permutation(members)
        keep.extend(perm[: _floor_share(budget.fraction, members.size)].tolist())
    return _take(train, keep)

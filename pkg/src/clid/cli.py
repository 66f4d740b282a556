"""``clid`` command line.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from clid import persist
from clid.corpus import (
    LANGUAGES,
    LabeledCorpus,
    SplitSpec,
    corpus_stats,
    deduplicate,
    load_corpus,
    save_corpus,
    split,
)
from clid.errors import ClidError, ConfigError, DataError
from clid.eval import render_report
from clid.features import fit_pca
from clid.pipeline import FEATURE_SETS, UNSUP_BLOCKS, FeaturePipeline, fit_pipeline
from clid.runner import (
    MODELS,
    CorpusSource,
    ExperimentConfig,
    TrainedModel,
    fit_cell,
    load_config,
    run_grid,
)
from clid.synthetic import generate_synthetic
from clid.unsup.lda import lda_top_terms

log = logging.getLogger("clid")


def _load(path: str) -> LabeledCorpus:
    corpus, report = load_corpus(path)
    log.info("%s", report)
    return corpus


def _out(path: str | None):
    if path:
        return open(path, "w", encoding="utf-8", newline="")
    return contextlib.nullcontext(sys.stdout)


def cmd_ingest(args) -> None:
    corpus, report = load_corpus(args.input)
    n = len(corpus)
    if not args.keep_duplicates:
        corpus = deduplicate(corpus)
    print(f"{report}, duplicates removed: {n - len(corpus)}", file=sys.stderr)
    if args.out:
        save_corpus(corpus, args.out)
    print(corpus_stats(corpus).to_table())


def cmd_stats(args) -> None:
    stats = corpus_stats(_load(args.corpus))
    print(stats.to_json() if args.format == "json" else stats.to_table())


def cmd_split(args) -> None:
    train, test = split(_load(args.corpus), SplitSpec(args.fraction, args.seed, not args.no_stratify))
    save_corpus(train, args.train)
    save_corpus(test, args.test)
    print(f"train: {len(train)}, test: {len(test)}, test hash: {test.content_hash()}")


def cmd_synth(args) -> None:
    corpus = generate_synthetic(args.seed, args.per_class, args.avg_len)
    if args.out:
        save_corpus(corpus, args.out)
    else:
        for s in corpus:
            sys.stdout.write(f"{s.label.code}\t{s.text}\n")


def cmd_features_dump(args) -> None:
    corpus = _load(args.corpus)
    fs = "ngram" if args.no_stats else "ngram+stats"
    pipe = fit_pipeline(corpus.unlabeled(), fs, hyper={"ngram": {"max_features": args.max_features}})
    X = pipe.transform(corpus.texts)
    with _out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(pipe.names() + ["label"])
        for row, s in zip(X, corpus):
            w.writerow([repr(float(v)) for v in row] + [s.label.code])
    if args.pca_out:
        P = fit_pca(X, 2).transform(X)
        with open(args.pca_out, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["pc1", "pc2", "label"])
            for (a, b), s in zip(P, corpus):
                w.writerow([repr(float(a)), repr(float(b)), s.label.code])


def _unsup_model(path: str) -> FeaturePipeline:
    model = persist.load(path)
    if not isinstance(model, FeaturePipeline) or model.feature_set not in UNSUP_BLOCKS:
        raise DataError(f"{path} does not hold an unsupervised model")
    return model


def cmd_unsup_fit(args) -> None:
    corpus = _load(args.corpus)
    seeds = {args.method: args.seed}
    model = fit_pipeline(corpus.unlabeled(), args.method, seeds)
    persist.save(model, args.out)
    print(f"wrote {args.method} model to {args.out}", file=sys.stderr)


def cmd_unsup_transform(args) -> None:
    model = _unsup_model(args.model_file)
    corpus = _load(args.corpus)
    X = model.transform(corpus.texts)
    with _out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(model.names())
        for row in X:
            w.writerow([repr(float(v)) for v in row])


def cmd_unsup_topics(args) -> None:
    model = _unsup_model(args.model_file)
    if model.lda is None:
        raise DataError("lda-topics needs an LDA model file")
    cols = [lda_top_terms(model.lda, k, args.n) for k in range(model.lda.K)]
    head = [f"Topic {k + 1}" for k in range(model.lda.K)]
    width = max([len(h) for h in head] + [len(t) for c in cols for t in c]) + 2
    print("".join(h.ljust(width) for h in head).rstrip())
    for i in range(max(len(c) for c in cols)):
        print("".join((c[i] if i < len(c) else "").ljust(width) for c in cols).rstrip())


def cmd_unsup_map(args) -> None:
    model = _unsup_model(args.model_file)
    corpus = _load(args.corpus)
    texts = corpus.texts
    with _out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        if model.ensemble is not None:
            stat = model._stat(texts)
            P = model.ensemble.project(stat)
            ids = model.ensemble.assignments(stat)
            w.writerow(["pc1", "pc2", "kmeans", "gmm", "birch", "agglomerative", "label"])
            for p, c, s in zip(P, ids, corpus):
                w.writerow([repr(float(p[0])), repr(float(p[1])), *map(int, c), s.label.code])
        elif model.vae is not None:
            Z = model.transform(texts)
            w.writerow(["z1", "z2", "label"])
            for z, s in zip(Z, corpus):
                w.writerow([repr(float(z[0])), repr(float(z[1])), s.label.code])
        else:
            T = model.transform(texts)
            w.writerow([f"topic{k + 1}" for k in range(T.shape[1])] + ["dominant", "label"])
            for t, s in zip(T, corpus):
                w.writerow([repr(float(v)) for v in t] + [int(np.argmax(t)) + 1, s.label.code])


def cmd_train(args) -> None:
    cfg = ExperimentConfig(
        corpus=CorpusSource(path=args.corpus, deduplicate=not args.keep_duplicates),
        features=args.features,
        model=args.model,
        label_fraction=args.label_fraction,
        train_fraction=args.train_fraction,
        seed=args.seed,
    )
    report, trained = fit_cell(cfg)
    persist.save(trained, args.out)
    print(render_report(report, args.format))


def cmd_predict(args) -> None:
    model = persist.load(args.model_file)
    if not isinstance(model, TrainedModel):
        raise DataError(f"{args.model_file} does not hold a trained classifier")
    src = open(args.input, encoding="utf-8") if args.input != "-" else sys.stdin
    with src:
        lines = [line.rstrip("\r\n") for line in src]
    pred = model.predict_texts(lines) if lines else []
    out = sys.stdout
    for p in pred:
        out.write(LANGUAGES[int(p)].code + "\n")


def cmd_experiment(args) -> None:
    cells, confusion = load_config(args.config)
    bundle = run_grid(cells)
    text = bundle.to_json()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    if args.format == "json":
        sys.stdout.write(text)
    elif args.format == "csv":
        sys.stdout.write(render_report(bundle.reports, "csv"))
    else:
        print(bundle.table())
        panel = bundle.confusion_panel(confusion)
        if panel:
            print("\n" + panel)
    if any(c["status"] != "ok" for c in bundle.cells):
        raise ClidError("one or more grid cells failed")


def _add_train_args(p) -> None:
    p.add_argument("corpus", help="labelled TSV corpus")
    p.add_argument("--model", choices=MODELS, default="nn")
    p.add_argument("--features", choices=FEATURE_SETS, default="ngram")
    p.add_argument("--label-fraction", type=float, default=1.0)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--keep-duplicates", action="store_true")
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=cmd_train)


def _add_predict_args(p) -> None:
    p.add_argument("--model-file", required=True)
    p.add_argument("--input", required=True, help="text file, one sentence per line ('-' for stdin)")
    p.set_defaults(func=cmd_predict)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="clid", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="clean and deduplicate a labelled TSV corpus")
    p.add_argument("input")
    p.add_argument("--out")
    p.add_argument("--keep-duplicates", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="corpus statistics")
    p.add_argument("corpus")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", help="write train/test TSV files")
    p.add_argument("corpus")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--no-stratify", action="store_true")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("synth", help="generate the synthetic fixture corpus")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--per-class", type=int, default=400)
    p.add_argument("--avg-len", type=float, default=15)
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    feats = sub.add_parser("features", help="feature extraction").add_subparsers(dest="action", required=True)
    p = feats.add_parser("dump", help="write the statistical feature matrix (and PCA coordinates) as CSV")
    p.add_argument("corpus")
    p.add_argument("--out")
    p.add_argument("--pca-out")
    p.add_argument("--max-features", type=int, default=3000)
    p.add_argument("--no-stats", action="store_true")
    p.set_defaults(func=cmd_features_dump)

    unsup = sub.add_parser("unsup", help="unsupervised models").add_subparsers(dest="action", required=True)
    p = unsup.add_parser("fit")
    p.add_argument("corpus")
    p.add_argument("--method", choices=UNSUP_BLOCKS, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_unsup_fit)
    p = unsup.add_parser("transform")
    p.add_argument("corpus")
    p.add_argument("--model-file", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_unsup_transform)
    p = unsup.add_parser("lda-topics")
    p.add_argument("--model-file", required=True)
    p.add_argument("-n", type=int, default=5)
    p.set_defaults(func=cmd_unsup_topics)
    p = unsup.add_parser("map")
    p.add_argument("corpus")
    p.add_argument("--model-file", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_unsup_map)

    _add_train_args(sub.add_parser("train", help="train a classifier and report test metrics"))
    _add_predict_args(sub.add_parser("predict", help="label sentences with a trained model"))
    classify = sub.add_parser("classify", help="alias group for train/predict").add_subparsers(
        dest="action", required=True
    )
    _add_train_args(classify.add_parser("train"))
    _add_predict_args(classify.add_parser("predict"))

    p = sub.add_parser("experiment", help="run an experiment grid from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="write the JSON report bundle here")
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except ClidError as exc:
        print(f"clid: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        # dataclass invariants (fractions, seeds) surface as plain ValueError
        print(f"clid: error: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    return 0


if __name__ == "__main__":
    sys.exit(main())

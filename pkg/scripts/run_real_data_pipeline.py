#!/usr/bin/env python3
"""Train the three-model ensemble on a user-supplied corpus and score it.

Example:
    python3 scripts/run_real_data_pipeline.py \
        --train agr_en_train.csv --format trac_csv \
        --eval dev=agr_en_dev.csv --eval facebook=agr_en_fb_test.csv \
        --glove glove.twitter.27B.100d.txt --fasttext crawl-300d-2M.vec \
        --out runs/trac

For every ``--eval name=path`` split this writes ``<name>.report.json`` and
``<name>.confusion.csv`` (gold rows by predicted columns) into the output
directory, next to the trained bundles, per-epoch logs, and a ``summary.json``
with each member's and the ensemble's weighted F1.  Without embedding files it
falls back to deterministic hashed vectors so the pipeline stays runnable.
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from aggrolab.cli import load_lexicons
from aggrolab.corpus import load_documents, make_split
from aggrolab.errors import AggrolabError, ConfigError
from aggrolab.models import (
    ARCHITECTURES,
    build_vocabulary,
    hashed_embeddings,
    load_dual_embeddings,
    save_bundle,
)
from aggrolab.preprocess import normalize_document
from aggrolab.trainer import TrainConfig, default_schema, evaluate, train_many


def parse_eval(value: str) -> tuple[str, str]:
    name, sep, path = value.partition("=")
    if not sep or not name or not path:
        raise ConfigError(f"--eval expects name=path, got {value!r}")
    return name, path


def build_argparser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description=__doc__.splitlines()[0],
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("--train", required=True, help="training corpus file")
    parser.add_argument("--eval", action="append", default=[], metavar="NAME=PATH",
                        help="labeled split to score (repeatable)")
    parser.add_argument("--format", default="trac_csv",
                        choices=("trac_csv", "kaggle_jsonl", "canonical_csv"))
    parser.add_argument("--profile", default="trac", choices=("trac", "kaggle"))
    parser.add_argument("--glove", default=None, help="word2vec-text GloVe file")
    parser.add_argument("--fasttext", default=None, help="word2vec-text fastText file")
    parser.add_argument("--hashed-dim", type=int, default=64,
                        help="embedding width when no files are given")
    parser.add_argument("--out", default="runs/real", help="output directory")
    parser.add_argument("--epochs", type=int, default=50)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--learning-rate", type=float, default=1e-3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--patience", type=int, default=10)
    parser.add_argument("--validation-fraction", type=float, default=0.1)
    parser.add_argument("--max-len", type=int, default=200)
    parser.add_argument("--resources", default=None, help="lexicon directory")
    parser.add_argument("--parallel", action="store_true",
                        help="train the three architectures concurrently")
    return parser


def run(args) -> int:
    if not args.eval:
        raise ConfigError("give at least one --eval name=path split")
    eval_splits = dict(parse_eval(v) for v in args.eval)
    extractor, rules = load_lexicons(args.resources)
    schema = default_schema(args.profile)
    config = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                         learning_rate=args.learning_rate, seed=args.seed,
                         patience=args.patience, profile=args.profile,
                         max_len=args.max_len)

    pool = load_documents(args.train, args.format, schema)
    if not pool:
        raise ConfigError(f"no documents in {args.train!r}")
    split = make_split(pool, args.validation_fraction, args.seed)
    print(f"train={len(split.train)} validation={len(split.validation)} "
          f"documents from {args.train}")

    vocabulary = build_vocabulary(
        normalize_document(d, rules, max_len=args.max_len).tokens
        for d in split.train)
    if (args.glove is None) != (args.fasttext is None):
        raise ConfigError("give both --glove and --fasttext, or neither")
    if args.glove:
        embedding = load_dual_embeddings(args.glove, args.fasttext, vocabulary)
        print(f"dual embeddings: {len(vocabulary)} words x {embedding.dim}")
    else:
        embedding = hashed_embeddings(vocabulary, dim=args.hashed_dim,
                                      seed=args.seed)
        print(f"hashed fallback embeddings: {len(vocabulary)} words x "
              f"{embedding.dim}")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = train_many(list(ARCHITECTURES), split, extractor, embedding,
                         config, rules=rules, schema=schema,
                         parallel=args.parallel)
    bundles = {}
    for name, (bundle, log) in results.items():
        bundles[name] = bundle
        save_bundle(bundle, out_dir / f"{name}.aggr")
        log.write_jsonl(out_dir / f"{name}.log.jsonl")
        print(f"{name}: {len(log.records)} epochs, checkpoint at "
              f"{log.checkpoint_epoch}, validation weighted F1 "
              f"{log.best_validation_f1:.4f}")

    summary = {}
    for name, path in eval_splits.items():
        docs = load_documents(path, args.format, schema)
        scores = {}
        for arch, bundle in bundles.items():
            scores[arch] = evaluate([bundle], docs, extractor,
                                    rules=rules).weighted_f1
        report = evaluate(list(bundles.values()), docs, extractor, rules=rules)
        report.write_json(out_dir / f"{name}.report.json")
        report.write_confusion_csv(out_dir / f"{name}.confusion.csv")
        scores["ensemble"] = report.weighted_f1
        summary[name] = {
            "documents": len(docs),
            "accuracy": report.accuracy,
            "weighted_f1": scores,
        }
        members = ", ".join(f"{a}={scores[a]:.4f}" for a in bundles)
        print(f"{name}: {len(docs)} documents; weighted F1 {members}, "
              f"ensemble={report.weighted_f1:.4f}")
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"reports written to {out_dir}")
    return 0


def main(argv=None) -> int:
    args = build_argparser().parse_args(argv)
    try:
        return run(args)
    except AggrolabError as exc:
        print(f"code={exc.code}: {exc.message}", file=sys.stderr)
        return exc.exit_status


if __name__ == "__main__":
    sys.exit(main())

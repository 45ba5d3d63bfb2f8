"""Command-line entry point: ingest, features, train, evaluate, predict, gradcheck.

One binary with subcommands.  Settings come from an optional JSON run config
(sections ``data``, ``resources``, ``model``, ``train``, ``output``; unknown
keys are rejected) and from flags; when both give a value, the flag wins.
Errors print ``code=<kind>: <message>`` on stderr; input problems exit 1 and
runtime failures exit 2.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from pathlib import Path

from .corpus import (
    FORMATS,
    KAGGLE_SCHEMA,
    TRAC_SCHEMA,
    Document,
    LabelSchema,
    load_documents,
    make_split,
    write_canonical_csv,
)
from .errors import AggrolabError, ConfigError, ResourceError
from .features import (
    DEFAULT_POS_LEXICON,
    EMOTICON_CLASSES,
    FeatureExtractor,
    PosTagger,
    emoticon_tfidf_fit,
    extract_features,
    feature_schema,
    load_category_lexicon,
    load_default_resources,
    load_emoticon_table,
    load_emotion_lexicon,
    load_sentiment_lexicon,
)
from .models import (
    ARCHITECTURES,
    OOV_POLICIES,
    build_vocabulary,
    hashed_embeddings,
    load_bundle,
    load_dual_embeddings,
    save_bundle,
    EmbeddingTable,
)
from .preprocess import (
    DEFAULT_MAX_LEN,
    NormalizationRules,
    default_rules,
    load_abbreviations,
    load_emoji_map,
    normalize_document,
)
from .trainer import (
    TrainConfig,
    default_schema,
    evaluate,
    predict_document,
    train_many,
)
from .verification import run_verification

RESOURCES_ENV = "AGGROLAB_RESOURCES"
ARCH_CHOICES = tuple(ARCHITECTURES) + ("all",)

_TRAIN_KEYS = {f.name for f in dataclasses.fields(TrainConfig)}
_ALLOWED_KEYS = {
    "data": {"train", "test", "format", "validation_fraction", "source"},
    "resources": {"dir", "glove", "fasttext", "hashed_dim", "oov_policy",
                  "embedding_seed"},
    "model": set(ARCHITECTURES),
    "train": _TRAIN_KEYS,
    "output": {"dir"},
}


class RunConfig:
    """Strictly-parsed JSON run configuration."""

    def __init__(self, sections: dict | None = None):
        if sections is None:
            sections = {}
        if not isinstance(sections, dict):
            raise ConfigError("run config must be a JSON object")
        unknown = set(sections) - set(_ALLOWED_KEYS)
        if unknown:
            raise ConfigError(
                f"unknown run-config section(s) {sorted(unknown)}; "
                f"expected a subset of {sorted(_ALLOWED_KEYS)}")
        for section, allowed in _ALLOWED_KEYS.items():
            value = sections.get(section, {})
            if not isinstance(value, dict):
                raise ConfigError(f"run-config section {section!r} must be an object")
            bad = set(value) - allowed
            if bad:
                raise ConfigError(
                    f"unknown key(s) {sorted(bad)} in run-config section "
                    f"{section!r}; expected a subset of {sorted(allowed)}")
            setattr(self, section, dict(value))

    @classmethod
    def from_path(cls, path: str | None) -> "RunConfig":
        if path is None:
            return cls()
        try:
            with open(path, encoding="utf-8") as fh:
                return cls(json.load(fh))
        except FileNotFoundError:
            raise ConfigError(f"run config {path!r} does not exist") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"run config {path!r} is not valid JSON: {exc}") from None


def load_lexicons(directory: str | None) -> tuple[FeatureExtractor, NormalizationRules]:
    """Lexicons from an explicit directory, else $AGGROLAB_RESOURCES, else the
    bundled files."""
    directory = directory or os.environ.get(RESOURCES_ENV)
    if directory is None:
        return load_default_resources(), default_rules()
    base = Path(directory)
    if not base.is_dir():
        raise ResourceError(f"resource directory {str(base)!r} does not exist")
    needed = ("emotion.csv", "empath.tsv", "sentiment.tsv", "emoticons.txt",
              "abbrev.tsv", "emoji.tsv")
    missing = [name for name in needed if not (base / name).is_file()]
    if missing:
        raise ResourceError(
            f"resource directory {str(base)!r} is missing {missing}")
    extractor = FeatureExtractor(
        emotion_lexicon=load_emotion_lexicon(base / "emotion.csv"),
        category_lexicon=load_category_lexicon(base / "empath.tsv"),
        sentiment_lexicon=load_sentiment_lexicon(base / "sentiment.tsv"),
        pos_tagger=PosTagger(lexicon=DEFAULT_POS_LEXICON),
        emoticon_table=load_emoticon_table(base / "emoticons.txt"),
    )
    rules = NormalizationRules(
        abbreviation_map=load_abbreviations(base / "abbrev.tsv"),
        emoji_map=load_emoji_map(base / "emoji.tsv"),
    )
    return extractor, rules


def _merge_train_config(config: RunConfig, args) -> TrainConfig:
    """Config-file values overridden by any flags the user set."""
    merged = dict(config.train)
    for key in _TRAIN_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    bad = set(merged) - _TRAIN_KEYS
    if bad:
        raise ConfigError(f"unknown train setting(s) {sorted(bad)}")
    return TrainConfig(**merged)


def _model_configs(config: RunConfig) -> dict:
    out = {}
    for name, overrides in config.model.items():
        cls = ARCHITECTURES[name].config_cls
        if not isinstance(overrides, dict):
            raise ConfigError(f"model section {name!r} must be an object")
        try:
            out[name] = cls(**overrides)
        except TypeError:
            known = sorted(f.name for f in dataclasses.fields(cls))
            raise ConfigError(
                f"bad {name!r} model config {sorted(overrides)}; "
                f"known fields: {known}") from None
    return out


def _schema_for(profile: str) -> LabelSchema:
    return default_schema(profile)


def _read_documents(path: str | None, fmt: str, schema: LabelSchema,
                    source: str, what: str) -> list[Document]:
    if path is None:
        raise ConfigError(f"no {what} file given (flag or run-config data section)")
    return load_documents(path, fmt, schema, default_source=source)


def _build_embedding(config: RunConfig, vocabulary: list[str],
                     seed: int) -> EmbeddingTable:
    res = config.resources
    glove, fasttext = res.get("glove"), res.get("fasttext")
    if (glove is None) != (fasttext is None):
        raise ConfigError("give both 'glove' and 'fasttext' paths, or neither")
    if glove is not None:
        for path in (glove, fasttext):
            if not Path(path).is_file():
                raise ResourceError(f"embedding file {path!r} does not exist")
        policy = res.get("oov_policy", "zero")
        if policy not in OOV_POLICIES:
            raise ConfigError(
                f"unknown oov_policy {policy!r}; expected one of {OOV_POLICIES}")
        return load_dual_embeddings(glove, fasttext, vocabulary,
                                    oov_policy=policy,
                                    seed=int(res.get("embedding_seed", 0)))
    return hashed_embeddings(vocabulary, dim=int(res.get("hashed_dim", 64)),
                             seed=int(res.get("embedding_seed", 0)))


# ------------------------------------------------------------------ commands


def _cmd_ingest(args) -> int:
    schema = TRAC_SCHEMA if args.format == "trac_csv" else KAGGLE_SCHEMA
    docs = load_documents(args.infile, args.format, schema,
                          default_source=args.source)
    write_canonical_csv(docs, args.out, schema)
    print(f"wrote {len(docs)} documents to {args.out}")
    return 0


def _cmd_features(args) -> int:
    config = RunConfig.from_path(args.config)
    extractor, rules = load_lexicons(args.resources or config.resources.get("dir"))
    profile = args.profile or config.train.get("profile", "trac")
    schema = _schema_for(profile)
    fmt = args.format or config.data.get("format", "canonical_csv")
    docs = _read_documents(args.infile, fmt, schema,
                           config.data.get("source", "other"), "input")
    if not docs:
        raise ConfigError(f"no documents in {args.infile!r}")
    max_len = int(config.train.get("max_len", DEFAULT_MAX_LEN))
    processed = [normalize_document(d, rules, max_len=max_len) for d in docs]
    if profile == "trac":
        labeled = [(p, d.label) for p, d in zip(processed, docs)
                   if d.label is not None]
        if not labeled:
            raise ConfigError(
                "the trac profile needs labeled input to fit emoticon TF-IDF")
        model = emoticon_tfidf_fit([p for p, _ in labeled],
                                   [lbl for _, lbl in labeled],
                                   EMOTICON_CLASSES, extractor.emoticon_table)
        extractor = extractor.with_emoticon_model(model)
    names = feature_schema(profile)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", *names])
        for doc, proc in zip(docs, processed):
            values = extract_features(proc, extractor, profile).values
            writer.writerow([doc.id, *(repr(float(v)) for v in values)])
    print(f"wrote {len(docs)} x {len(names)} feature rows to {args.out}")
    return 0


def _cmd_train(args) -> int:
    config = RunConfig.from_path(args.config)
    train_config = _merge_train_config(config, args)
    extractor, rules = load_lexicons(args.resources or config.resources.get("dir"))
    schema = _schema_for(train_config.profile)
    fmt = args.format or config.data.get("format", "canonical_csv")
    pool = _read_documents(args.train or config.data.get("train"), fmt, schema,
                           config.data.get("source", "other"), "training")
    if not pool:
        raise ConfigError("training file holds no documents")
    fraction = (args.validation_fraction
                if args.validation_fraction is not None
                else float(config.data.get("validation_fraction", 0.1)))
    split = make_split(pool, fraction, train_config.seed)

    vocabulary = build_vocabulary(
        normalize_document(d, rules, max_len=train_config.max_len).tokens
        for d in split.train)
    embedding = _build_embedding(config, vocabulary, train_config.seed)

    out_dir = Path(args.out or config.output.get("dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    names = list(ARCHITECTURES) if args.arch == "all" else [args.arch]
    results = train_many(names, split, extractor, embedding, train_config,
                         model_configs=_model_configs(config), rules=rules,
                         schema=schema, parallel=args.parallel)
    for name, (bundle, log) in results.items():
        bundle_path = out_dir / f"{name}.aggr"
        save_bundle(bundle, bundle_path)
        log.write_jsonl(out_dir / f"{name}.log.jsonl")
        print(f"arch={name} epochs={len(log.records)} "
              f"checkpoint_epoch={log.checkpoint_epoch} "
              f"best_validation_f1={log.best_validation_f1:.4f} "
              f"bundle={bundle_path}")
    return 0


def _load_bundles(spec: str):
    paths = [p for p in (s.strip() for s in spec.split(",")) if p]
    if not paths:
        raise ConfigError("--bundles needs at least one path")
    missing = [p for p in paths if not Path(p).is_file()]
    if missing:
        raise ConfigError(f"bundle file(s) not found: {missing}")
    return [load_bundle(p) for p in paths]


def _cmd_evaluate(args) -> int:
    config = RunConfig.from_path(args.config)
    bundles = _load_bundles(args.bundles)
    extractor, rules = load_lexicons(args.resources or config.resources.get("dir"))
    schema = bundles[0].schema
    fmt = args.format or config.data.get("format", "canonical_csv")
    docs = _read_documents(args.test or config.data.get("test"), fmt, schema,
                           config.data.get("source", "other"), "test")
    report = evaluate(bundles, docs, extractor, rules=rules)
    report.write_json(args.report)
    if args.confusion:
        report.write_confusion_csv(args.confusion)
    print(f"documents={len(docs)} accuracy={report.accuracy:.4f} "
          f"weighted_f1={report.weighted_f1:.4f} report={args.report}")
    return 0


def _cmd_predict(args) -> int:
    config = RunConfig.from_path(args.config)
    bundles = _load_bundles(args.bundles)
    extractor, rules = load_lexicons(args.resources or config.resources.get("dir"))
    doc = Document(id="cli-input", raw_text=args.text)
    label, probs = predict_document(bundles, doc, extractor, rules=rules)
    print(label, " ".join(f"{p:.6f}" for p in probs))
    return 0


def _cmd_gradcheck(args) -> int:
    suite = run_verification(seeds=range(args.seeds), tolerance=args.tolerance)
    print(suite.format_report())
    if not suite.passed:
        print(f"code=gradient_mismatch: max relative error "
              f"{suite.max_rel_err:.3e} over tolerance {args.tolerance:.1e}",
              file=sys.stderr)
        return 2
    return 0


# -------------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    """Raise instead of exiting so bad flags map to exit status 1."""

    def error(self, message):
        raise ConfigError(message)


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    """Skip the automatic "(default: None)" on flags whose None means
    "fall back to the run config"; their help text states the effective
    default instead."""

    def _get_help_string(self, action):
        if action.default is None:
            return action.help
        return super()._get_help_string(action)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="aggrolab",
        description="Aggression identification: preprocessing, handcrafted "
                    "features, three deep classifiers, ensemble evaluation.",
        formatter_class=_HelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text,
                           formatter_class=_HelpFormatter)
        p.set_defaults(func=func)
        return p

    p = add("ingest", _cmd_ingest, "convert a raw dataset to canonical CSV")
    p.add_argument("--format", required=True, choices=("trac_csv", "kaggle_jsonl"),
                   help="input file layout")
    p.add_argument("--in", dest="infile", required=True, help="input file")
    p.add_argument("--out", required=True, help="canonical CSV to write")
    p.add_argument("--source", default="other",
                   choices=("facebook", "twitter", "other"),
                   help="source recorded for every document")

    p = add("features", _cmd_features, "emit handcrafted feature vectors as CSV")
    p.add_argument("--config", default=None, help="JSON run config")
    p.add_argument("--in", dest="infile", required=True, help="document file")
    p.add_argument("--out", required=True, help="feature CSV to write")
    p.add_argument("--format", default=None, choices=FORMATS,
                   help="input layout (default: canonical_csv)")
    p.add_argument("--profile", default=None, choices=("trac", "kaggle"),
                   help="feature profile (default: trac)")
    p.add_argument("--resources", default=None,
                   help=f"lexicon directory (default: ${RESOURCES_ENV} or bundled)")

    p = add("train", _cmd_train, "train one architecture or all three")
    p.add_argument("--config", default=None, help="JSON run config")
    p.add_argument("--arch", default="all", choices=ARCH_CHOICES,
                   help="architecture to train")
    p.add_argument("--train", default=None, help="training document file")
    p.add_argument("--out", default=None, help="output directory for bundles")
    p.add_argument("--format", default=None, choices=FORMATS,
                   help="input layout (default: canonical_csv)")
    p.add_argument("--validation-fraction", type=float, default=None,
                   dest="validation_fraction",
                   help="fraction of the pool held out for checkpointing "
                        "(default: 0.1)")
    p.add_argument("--parallel", action="store_true",
                   help="train the architectures concurrently")
    p.add_argument("--resources", default=None,
                   help=f"lexicon directory (default: ${RESOURCES_ENV} or bundled)")
    p.add_argument("--epochs", type=int, default=None, help="max epochs (default: 50)")
    p.add_argument("--batch-size", type=int, default=None, dest="batch_size",
                   help="documents per update (default: 32)")
    p.add_argument("--learning-rate", type=float, default=None, dest="learning_rate",
                   help="optimizer step size (default: 0.001)")
    p.add_argument("--seed", type=int, default=None, help="run seed (default: 0)")
    p.add_argument("--patience", type=int, default=None,
                   help="epochs without validation improvement before stopping "
                        "(default: 10)")
    p.add_argument("--clip-norm", type=float, default=None, dest="clip_norm",
                   help="joint gradient-norm ceiling, 0 disables (default: 5.0)")
    p.add_argument("--profile", default=None, choices=("trac", "kaggle"),
                   dest="profile", help="feature profile (default: trac)")
    p.add_argument("--max-len", type=int, default=None, dest="max_len",
                   help="token truncation length (default: 200)")
    p.add_argument("--optimizer", default=None, choices=("adam", "rmsprop"),
                   help="override the per-architecture optimizer")

    p = add("evaluate", _cmd_evaluate, "score an ensemble on labeled documents")
    p.add_argument("--config", default=None, help="JSON run config")
    p.add_argument("--bundles", required=True,
                   help="comma-separated bundle paths (1 to 3)")
    p.add_argument("--test", default=None, help="labeled document file")
    p.add_argument("--report", required=True, help="evaluation JSON to write")
    p.add_argument("--confusion", default=None,
                   help="also write the confusion matrix as CSV here")
    p.add_argument("--format", default=None, choices=FORMATS,
                   help="input layout (default: canonical_csv)")
    p.add_argument("--resources", default=None,
                   help=f"lexicon directory (default: ${RESOURCES_ENV} or bundled)")

    p = add("predict", _cmd_predict, "classify one text with an ensemble")
    p.add_argument("--config", default=None, help="JSON run config")
    p.add_argument("--bundles", required=True,
                   help="comma-separated bundle paths (1 to 3)")
    p.add_argument("--text", required=True, help="raw text to classify")
    p.add_argument("--resources", default=None,
                   help=f"lexicon directory (default: ${RESOURCES_ENV} or bundled)")

    p = add("gradcheck", _cmd_gradcheck,
            "finite-difference check of every layer and architecture")
    p.add_argument("--seeds", type=int, default=5, help="number of seeds to sweep")
    p.add_argument("--tolerance", type=float, default=1e-4,
                   help="max relative error allowed")

    return parser


def run_command(argv) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help lands here; errors raise ConfigError
        return int(exc.code or 0)
    except AggrolabError as exc:
        print(f"code={exc.code}: {exc.message}", file=sys.stderr)
        return exc.exit_status
    try:
        return args.func(args)
    except AggrolabError as exc:
        print(f"code={exc.code}: {exc.message}", file=sys.stderr)
        return exc.exit_status
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"code=internal: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()

"""Training loop, validation checkpointing, and ensemble evaluation.

One model is trained per architecture; ensembles average the probability
outputs of one to three trained bundles.  All randomness flows through
named ``rng_stream`` paths keyed by the run seed and the architecture, so
a fixed configuration reproduces the same bundle byte for byte.
"""

from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .corpus import DatasetSplit, Document, KAGGLE_SCHEMA, LabelSchema, TRAC_SCHEMA
from .ensemble import EvaluationReport, average_probabilities, build_report, predict_label, weighted_f1
from .errors import ConfigError, DataFormatError, DivergenceError, UnknownLabelError
from .features import (
    EMOTICON_CLASSES,
    FeatureExtractor,
    extract_features,
    feature_schema,
    emoticon_tfidf_fit,
    scaler_apply,
    scaler_fit,
)
from .models import ARCHITECTURES, EmbeddingTable, ModelBundle, PAD_INDEX
from .numerics import (
    OptimizerState,
    Tape,
    Tensor,
    add,
    binary_cross_entropy,
    clip_gradient_norm,
    optimizer_step,
    rng_stream,
    scale,
    softmax_cross_entropy,
    zero_gradients,
)
from .preprocess import DEFAULT_MAX_LEN, NormalizationRules, ProcessedDocument, default_rules, normalize_document

OPTIMIZER_FOR = {"dpcnn": "adam", "drnn": "rmsprop", "pooled_bilstm": "rmsprop"}
MAX_ENSEMBLE = 3


@dataclass(frozen=True)
class TrainConfig:
    """Run-level knobs shared by every architecture."""

    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    patience: int = 10
    clip_norm: float = 5.0
    profile: str = "trac"
    max_len: int = DEFAULT_MAX_LEN
    optimizer: str | None = None  # None selects the per-architecture default

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if self.clip_norm < 0:
            raise ConfigError(f"clip_norm must be >= 0, got {self.clip_norm}")
        if self.max_len < 1:
            raise ConfigError(f"max_len must be >= 1, got {self.max_len}")
        if self.profile not in ("trac", "kaggle"):
            raise ConfigError(f"unknown profile {self.profile!r}")
        if self.optimizer not in (None, "adam", "rmsprop"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    validation_f1: float

    def to_json(self) -> dict:
        return {"epoch": self.epoch, "train_loss": self.train_loss,
                "validation_f1": self.validation_f1}


@dataclass
class TrainLog:
    """Per-epoch history plus which epoch's weights were kept."""

    architecture: str
    records: list[EpochRecord] = field(default_factory=list)
    checkpoint_epoch: int = 0
    stopped_early: bool = False

    @property
    def best_validation_f1(self) -> float:
        return max(r.validation_f1 for r in self.records)

    def to_jsonl(self) -> str:
        lines = [json.dumps({"architecture": self.architecture, **r.to_json()},
                            sort_keys=True) for r in self.records]
        lines.append(json.dumps(
            {"architecture": self.architecture,
             "checkpoint_epoch": self.checkpoint_epoch,
             "stopped_early": self.stopped_early}, sort_keys=True))
        return "\n".join(lines) + "\n"

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())


def default_schema(profile: str) -> LabelSchema:
    return TRAC_SCHEMA if profile == "trac" else KAGGLE_SCHEMA


def _label_index(doc: Document, schema: LabelSchema, role: str) -> int:
    if doc.label is None:
        raise DataFormatError(f"{role} document {doc.id!r} has no label")
    if not 0 <= doc.label < schema.K:
        raise UnknownLabelError(
            f"{role} document {doc.id!r}: label index {doc.label} outside "
            f"schema of K={schema.K}")
    return doc.label


@dataclass(frozen=True)
class _PreparedDocument:
    indices: np.ndarray
    features: np.ndarray
    label: int | None
    doc_id: str


def _prepare(
    documents: Sequence[Document],
    role: str,
    *,
    schema: LabelSchema,
    extractor: FeatureExtractor,
    rules: NormalizationRules,
    profile: str,
    max_len: int,
    token_to_index: Mapping[str, int],
    scaler,
    require_labels: bool = True,
) -> list[_PreparedDocument]:
    out = []
    for doc in documents:
        label = _label_index(doc, schema, role) if require_labels else doc.label
        processed = normalize_document(doc, rules, max_len=max_len)
        vector = extract_features(processed, extractor, profile).values
        out.append(_PreparedDocument(
            indices=np.array([token_to_index.get(t, PAD_INDEX)
                              for t in processed.tokens], dtype=np.int64),
            features=scaler_apply(scaler, vector),
            label=label,
            doc_id=doc.id,
        ))
    return out


def _document_loss(arch, prepared: _PreparedDocument, params, model_config,
                   num_classes: int, dropout_rng) -> Tensor:
    logits = arch.logits(prepared.indices, prepared.features, params,
                         model_config, mode="train", rng=dropout_rng)
    if num_classes == 2:
        loss, _ = binary_cross_entropy(logits, prepared.label)
    else:
        loss, _ = softmax_cross_entropy(logits, prepared.label)
    return loss


def train_model(
    architecture: str,
    split: DatasetSplit,
    extractor: FeatureExtractor,
    embedding: EmbeddingTable,
    config: TrainConfig,
    *,
    model_config=None,
    rules: NormalizationRules | None = None,
    schema: LabelSchema | None = None,
) -> tuple[ModelBundle, TrainLog]:
    """Fit one architecture on the split's train fold, keeping the weights
    from the epoch with the best validation weighted F1."""
    if architecture not in ARCHITECTURES:
        raise ConfigError(f"unknown architecture {architecture!r}; "
                          f"expected one of {tuple(ARCHITECTURES)}")
    if not split.train:
        raise ConfigError("training split is empty")
    if not split.validation:
        raise ConfigError("validation split is empty (needed to pick a checkpoint)")
    arch = ARCHITECTURES[architecture]
    if model_config is None:
        model_config = arch.config_cls()
    elif not isinstance(model_config, arch.config_cls):
        raise ConfigError(
            f"model_config for {architecture!r} must be {arch.config_cls.__name__}, "
            f"got {type(model_config).__name__}")
    rules = rules or default_rules()
    schema = schema or default_schema(config.profile)
    num_classes = schema.K
    feature_dim = len(feature_schema(config.profile))
    for role, docs in (("train", split.train), ("validation", split.validation)):
        for doc in docs:
            _label_index(doc, schema, role)

    # Fit the data-dependent feature state on the train fold only.
    train_processed = [normalize_document(d, rules, max_len=config.max_len)
                       for d in split.train]
    emoticon_model = None
    if config.profile == "trac":
        train_labels = [d.label for d in split.train]
        emoticon_model = emoticon_tfidf_fit(
            train_processed, train_labels, EMOTICON_CLASSES,
            extractor.emoticon_table)
        extractor = extractor.with_emoticon_model(emoticon_model)
    raw_train = [extract_features(p, extractor, config.profile).values
                 for p in train_processed]
    scaler = scaler_fit(raw_train)

    prep = dict(schema=schema, extractor=extractor, rules=rules,
                profile=config.profile, max_len=config.max_len,
                token_to_index=embedding.vocabulary, scaler=scaler)
    train_docs = _prepare(split.train, "train", **prep)
    val_docs = _prepare(split.validation, "validation", **prep)

    params = arch.init_params(
        model_config, rng_stream(config.seed, architecture, "init"),
        num_classes, feature_dim, embedding.matrix.copy())
    trainable = {name: p for name, p in params.items() if p.requires_grad}
    state = OptimizerState(kind=config.optimizer or OPTIMIZER_FOR[architecture],
                           lr=config.learning_rate)

    log = TrainLog(architecture=architecture)
    best_f1 = -1.0
    checkpoint: dict[str, np.ndarray] = {}
    val_gold = [d.label for d in val_docs]

    for epoch in range(1, config.epochs + 1):
        order = rng_stream(config.seed, architecture, "shuffle", epoch)\
            .permutation(len(train_docs))
        dropout_rng = rng_stream(config.seed, architecture, "dropout", epoch)
        loss_sum = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = [train_docs[i] for i in order[start:start + config.batch_size]]
            with Tape() as tape:
                total = None
                for doc in batch:
                    loss = _document_loss(arch, doc, params, model_config,
                                          num_classes, dropout_rng)
                    total = loss if total is None else add(total, loss)
                objective = scale(total, 1.0 / len(batch))
                if arch.regularizer is not None:
                    objective = add(objective, arch.regularizer(params, model_config))
                value = float(objective.data.reshape(()))
                if not np.isfinite(value):
                    raise DivergenceError(epoch, start // config.batch_size, value)
                zero_gradients(trainable)
                tape.backward(objective)
            if config.clip_norm > 0:
                clip_gradient_norm(trainable, config.clip_norm)
            optimizer_step(state, trainable)
            loss_sum += value * len(batch)

        val_pred = [predict_label(arch.forward(d.indices, d.features, params,
                                               model_config, num_classes))
                    for d in val_docs]
        f1 = weighted_f1(val_gold, val_pred, num_classes)
        log.records.append(EpochRecord(epoch=epoch,
                                       train_loss=loss_sum / len(train_docs),
                                       validation_f1=f1))
        if f1 > best_f1:
            best_f1 = f1
            log.checkpoint_epoch = epoch
            checkpoint = {name: p.data.copy() for name, p in params.items()}
        elif epoch - log.checkpoint_epoch >= config.patience:
            log.stopped_early = True
            break

    bundle = ModelBundle(
        architecture=architecture,
        config=dataclasses.asdict(model_config),
        params={name: Tensor(data) for name, data in checkpoint.items()},
        scaler=scaler,
        schema=schema,
        profile=config.profile,
        vocabulary=dict(embedding.vocabulary),
        emoticon_model=emoticon_model,
    )
    return bundle, log


def train_many(
    architectures: Sequence[str],
    split: DatasetSplit,
    extractor: FeatureExtractor,
    embedding: EmbeddingTable,
    config: TrainConfig,
    *,
    model_configs: Mapping[str, object] | None = None,
    rules: NormalizationRules | None = None,
    schema: LabelSchema | None = None,
    parallel: bool = False,
) -> dict[str, tuple[ModelBundle, TrainLog]]:
    """Train several architectures on the same split, optionally in threads."""
    if len(set(architectures)) != len(architectures):
        raise ConfigError("duplicate architecture in training request")
    model_configs = model_configs or {}

    def run(name: str):
        return train_model(name, split, extractor, embedding, config,
                           model_config=model_configs.get(name),
                           rules=rules, schema=schema)

    if parallel and len(architectures) > 1:
        with ThreadPoolExecutor(max_workers=len(architectures)) as pool:
            results = list(pool.map(run, architectures))
    else:
        results = [run(name) for name in architectures]
    return dict(zip(architectures, results))


def bundle_probabilities(
    bundle: ModelBundle,
    document: Document,
    extractor: FeatureExtractor,
    *,
    rules: NormalizationRules | None = None,
    max_len: int = DEFAULT_MAX_LEN,
) -> np.ndarray:
    """Class probabilities one trained bundle assigns to one raw document."""
    rules = rules or default_rules()
    processed = normalize_document(document, rules, max_len=max_len)
    return _processed_probabilities(bundle, processed, extractor)


def _processed_probabilities(bundle: ModelBundle, processed: ProcessedDocument,
                             extractor: FeatureExtractor) -> np.ndarray:
    if bundle.profile == "trac":
        extractor = extractor.with_emoticon_model(bundle.emoticon_model)
    vector = extract_features(processed, extractor, bundle.profile).values
    features = scaler_apply(bundle.scaler, vector)
    indices = np.array([bundle.vocabulary.get(t, PAD_INDEX)
                        for t in processed.tokens], dtype=np.int64)
    arch = ARCHITECTURES[bundle.architecture]
    model_config = arch.config_cls(**bundle.config)
    return arch.forward(indices, features, bundle.params, model_config,
                        bundle.num_classes)


def _check_ensemble(bundles: Sequence[ModelBundle]) -> None:
    if not 1 <= len(bundles) <= MAX_ENSEMBLE:
        raise ConfigError(
            f"ensemble size must be between 1 and {MAX_ENSEMBLE}, got {len(bundles)}")
    first = bundles[0]
    for b in bundles[1:]:
        if b.schema.names != first.schema.names:
            raise ConfigError(
                f"ensemble members disagree on label schema: "
                f"{first.schema.names} vs {b.schema.names}")
        if b.profile != first.profile:
            raise ConfigError(
                f"ensemble members disagree on feature profile: "
                f"{first.profile!r} vs {b.profile!r}")


def predict_document(
    bundles: Sequence[ModelBundle],
    document: Document,
    extractor: FeatureExtractor,
    *,
    rules: NormalizationRules | None = None,
    max_len: int = DEFAULT_MAX_LEN,
) -> tuple[str, np.ndarray]:
    """Averaged ensemble prediction: (label name, probability vector)."""
    _check_ensemble(bundles)
    rules = rules or default_rules()
    processed = normalize_document(document, rules, max_len=max_len)
    probs = average_probabilities(
        [_processed_probabilities(b, processed, extractor) for b in bundles])
    return bundles[0].schema.names[predict_label(probs)], probs


def evaluate(
    bundles: Sequence[ModelBundle],
    documents: Sequence[Document],
    extractor: FeatureExtractor,
    *,
    rules: NormalizationRules | None = None,
    max_len: int = DEFAULT_MAX_LEN,
) -> EvaluationReport:
    """Score an ensemble of one to three bundles on gold-labeled documents."""
    _check_ensemble(bundles)
    if not documents:
        raise ConfigError("cannot evaluate on an empty document set")
    rules = rules or default_rules()
    schema = bundles[0].schema
    gold, predicted = [], []
    for doc in documents:
        gold.append(_label_index(doc, schema, "test"))
        processed = normalize_document(doc, rules, max_len=max_len)
        probs = average_probabilities(
            [_processed_probabilities(b, processed, extractor) for b in bundles])
        predicted.append(predict_label(probs))
    return build_report(gold, predicted, schema.names)

"""Handcrafted psycho-linguistic feature extraction.

Builds the auxiliary feature vector concatenated into every classifier:
emotion-category scores, part-of-speech frequencies, punctuation count,
sentiment triple, topic-category signals, and per-class emoticon TF-IDF.
The full profile is 24-dimensional; the binary-corpus profile drops the
punctuation and emoticon groups (20 dimensions). Corpus-fitted pieces
(emoticon TF-IDF table, z-score scaler) are fitted on training data only
and serialized with trained models.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, NotFittedError, ResourceError, ShapeMismatchError, UnknownLabelError
from .preprocess import ProcessedDocument, resource_path, tokenize

EMOTION_NAMES = ("disgust", "surprise", "neutral", "anger", "sad", "happy", "fear")
POS_GROUPS = ("noun", "adjective", "verb", "adverb")
TOPIC_CATEGORIES = ("violence", "hate", "anger", "aggression", "social_media", "dispute")
PROFILES = ("trac", "kaggle")
EMOTICON_CLASSES = 3  # emoticon TF-IDF group width in the full profile

NEGATORS = frozenset("""
    not no never neither nor cannot cant can't dont don't doesnt doesn't didnt
    didn't isnt isn't arent aren't wasnt wasn't werent weren't wont won't
    wouldnt wouldn't shouldnt shouldn't couldnt couldn't aint ain't hardly
    barely without
""".split())

BOOSTERS: Mapping[str, float] = {
    "very": 0.3, "really": 0.3, "extremely": 0.4, "absolutely": 0.3,
    "totally": 0.3, "completely": 0.3, "utterly": 0.4, "so": 0.3,
    "too": 0.3, "quite": 0.2, "pretty": 0.2, "super": 0.3, "damn": 0.3,
}

NEGATOR_WINDOW = 3  # tokens looked back for a sign-flipping negator


@dataclass(frozen=True)
class EmotionLexicon:
    """word → distribution over the seven emotion categories."""

    rows: Mapping[str, tuple[float, ...]]

    def __post_init__(self):
        for word, row in self.rows.items():
            if len(row) != len(EMOTION_NAMES):
                raise ValueError(f"emotion row for {word!r} has {len(row)} entries")
            if any(not math.isfinite(v) or v < 0 for v in row):
                raise ValueError(f"emotion row for {word!r} has invalid entries")


@dataclass(frozen=True)
class CategoryLexicon:
    """Topic category → word set; exactly the six supported categories."""

    categories: Mapping[str, frozenset[str]]

    def __post_init__(self):
        if set(self.categories) != set(TOPIC_CATEGORIES):
            raise ValueError(
                f"expected categories {TOPIC_CATEGORIES}, got {sorted(self.categories)}"
            )


@dataclass(frozen=True)
class SentimentLexicon:
    """word → valence in [-4, 4], plus negator and booster tables."""

    valences: Mapping[str, float]
    negators: frozenset[str] = NEGATORS
    boosters: Mapping[str, float] = field(default_factory=lambda: dict(BOOSTERS))

    def __post_init__(self):
        for word, v in self.valences.items():
            if not math.isfinite(v) or not -4.0 <= v <= 4.0:
                raise ValueError(f"valence for {word!r} outside [-4, 4]: {v}")
        overlap = self.negators & set(self.boosters)
        if overlap:
            raise ValueError(f"words in both negator and booster tables: {sorted(overlap)}")


@dataclass(frozen=True)
class PosTagger:
    """Deterministic lexicon-plus-suffix tagger over four coarse groups.

    Closed-class words resolve through the lexicon (possibly to "other");
    unknown words fall through suffix rules and default to noun.
    """

    lexicon: Mapping[str, str]

    def __post_init__(self):
        valid = set(POS_GROUPS) | {"other"}
        for word, tag in self.lexicon.items():
            if tag not in valid:
                raise ValueError(f"tagger lexicon maps {word!r} to unknown tag {tag!r}")

    def tag(self, token: str) -> str:
        known = self.lexicon.get(token)
        if known is not None:
            return known
        if token.endswith("ly") and len(token) > 3:
            return "adverb"
        if token.endswith(("ous", "ful", "ive", "less", "ish", "able", "ible")):
            return "adjective"
        if token.endswith("ing") and len(token) > 4:
            return "verb"
        if token.endswith("ed") and len(token) > 3:
            return "verb"
        return "noun"


def _words(text: str, tag: str) -> dict[str, str]:
    return {w: tag for w in text.split()}

DEFAULT_POS_LEXICON: Mapping[str, str] = {
    **_words("""
        the a an and or but if then than because of in on at to for with from
        by as is am are was were be been being do does did done has have had
        having will would shall should can could may might must not no nor
        this that these those there who whom whose which what when where why
        how i you he she it we they me him her us them my your his its our
        their mine yours theirs someone anyone everyone nobody something
        anything nothing everything per via any all each every some such own
        oh hey hello please yes
    """, "other"),
    **_words("""
        very really quite too never always often sometimes soon now again away
        here well almost just only even still yet maybe perhaps indeed
    """, "adverb"),
    **_words("""
        good bad angry happy sad big small great new old young little long
        short high low hot cold nice fine ugly silly stupid dumb fake true
        false real proud poor rich wrong right other same many few next last
        first second best worst better worse beautiful free full empty
    """, "adjective"),
    **_words("""
        go goes went gone get gets got make makes made take takes took say
        says said know knows knew think thinks thought see sees saw come
        comes came want wants give gives gave tell tells told put puts let
        lets run runs ran speak speaks spoke write writes wrote read reads
        keep keeps kept stop stops find finds found feel feels felt leave
        leaves left mean means meant show shows shown bring brings brought
        become becomes became begin begins began
    """, "verb"),
    **_words("""
        thing things king kings ring rings morning evening building wedding
        feeling feelings family story money country city people time day
        place need bed
    """, "noun"),
}


def emotion_scores(tokens: Sequence[str], lexicon: EmotionLexicon) -> np.ndarray:
    """Mean emotion distribution over in-vocabulary tokens (zeros if none)."""
    rows = [lexicon.rows[t] for t in tokens if t in lexicon.rows]
    if not rows:
        return np.zeros(len(EMOTION_NAMES))
    return np.asarray(rows, dtype=np.float64).mean(axis=0)


def pos_frequencies(tokens: Sequence[str], tagger: PosTagger) -> np.ndarray:
    """Normalized frequencies of noun/adjective/verb/adverb tags."""
    if not tokens:
        return np.zeros(len(POS_GROUPS))
    counts = dict.fromkeys(POS_GROUPS, 0)
    for token in tokens:
        tag = tagger.tag(token)
        if tag in counts:
            counts[tag] += 1
    return np.array([counts[g] / len(tokens) for g in POS_GROUPS])


def punctuation_count(snapshot_text: str) -> float:
    """Total occurrences of '!' and '?' in the snapshot."""
    return float(snapshot_text.count("!") + snapshot_text.count("?"))


def sentiment_scores(snapshot_text: str, lexicon: SentimentLexicon) -> np.ndarray:
    """(positive, negative, neutral) mass, normalized to sum to 1.

    Token valences are sign-flipped by a negator within the three preceding
    tokens and magnitude-boosted by an immediately preceding booster; tokens
    with zero valence count as neutral. All-neutral text maps to (0, 0, 1).
    """
    words = tokenize(snapshot_text.lower())
    pos = neg = 0.0
    neu = 0
    for i, word in enumerate(words):
        valence = lexicon.valences.get(word, 0.0)
        if valence == 0.0:
            neu += 1
            continue
        if i > 0 and words[i - 1] in lexicon.boosters:
            valence += math.copysign(lexicon.boosters[words[i - 1]], valence)
        lookback = words[max(0, i - NEGATOR_WINDOW):i]
        if any(w in lexicon.negators for w in lookback):
            valence = -valence
        if valence > 0:
            pos += valence
        else:
            neg += -valence
    total = pos + neg + neu
    if total == 0:
        return np.array([0.0, 0.0, 1.0])
    return np.array([pos, neg, neu]) / total


def topic_signals(tokens: Sequence[str], lexicon: CategoryLexicon) -> np.ndarray:
    """Per category, the fraction of tokens inside its word set."""
    if not tokens:
        return np.zeros(len(TOPIC_CATEGORIES))
    return np.array([
        sum(t in lexicon.categories[cat] for t in tokens) / len(tokens)
        for cat in TOPIC_CATEGORIES
    ])


def find_emoticons(snapshot_text: str, table: Sequence[str]) -> list[str]:
    """Emoticon occurrences in a snapshot, with multiplicity.

    Whitespace-delimited chunks are matched whole, then leading/trailing
    emoticons are peeled off word-attached chunks ("great:)"); emoticons
    embedded mid-chunk (as in URLs) are deliberately not matched.
    """
    keys = sorted(table, key=len, reverse=True)
    found: list[str] = []
    for chunk in snapshot_text.split():
        progress = True
        while chunk and progress:
            progress = False
            for key in keys:
                if chunk == key:
                    found.append(key)
                    chunk = ""
                    progress = True
                    break
                if chunk.startswith(key):
                    found.append(key)
                    chunk = chunk[len(key):]
                    progress = True
                    break
                if chunk.endswith(key):
                    found.append(key)
                    chunk = chunk[:-len(key)]
                    progress = True
                    break
    return found


@dataclass(frozen=True)
class EmoticonTfidfModel:
    """Per-class emoticon weights: weight(e, c) = tf(e, c) · idf(e)."""

    table: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    num_classes: int = 0
    fitted: bool = False

    def __post_init__(self):
        for emo, weights in self.table.items():
            if len(weights) != self.num_classes:
                raise ValueError(f"weight row for {emo!r} has wrong width")
            if any(w < 0 or not math.isfinite(w) for w in weights):
                raise ValueError(f"negative or non-finite weight for {emo!r}")

    def to_json(self) -> dict:
        return {
            "num_classes": self.num_classes,
            "fitted": self.fitted,
            "table": {e: list(w) for e, w in self.table.items()},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EmoticonTfidfModel":
        return cls(
            table={e: tuple(w) for e, w in obj["table"].items()},
            num_classes=obj["num_classes"],
            fitted=obj["fitted"],
        )


def emoticon_tfidf_fit(
    docs: Sequence[ProcessedDocument],
    labels: Sequence[int],
    K: int,
    emoticon_table: Sequence[str],
) -> EmoticonTfidfModel:
    """Fit per-class TF-IDF weights from labeled training snapshots.

    tf(e, c) is the count of e in class-c snapshots over the total emoticon
    count of class c; idf(e) = ln((1+K)/(1+k_e)) + 1 where k_e is the number
    of classes containing e.
    """
    if K < 2:
        raise ValueError(f"K must be >= 2, got {K}")
    if len(docs) != len(labels):
        raise ValueError("docs and labels length mismatch")
    counts = [dict() for _ in range(K)]
    for doc, label in zip(docs, labels):
        if label is None or not 0 <= label < K:
            raise UnknownLabelError(f"document {doc.id!r}: invalid label {label!r}")
        for emo in find_emoticons(doc.snapshot_text, emoticon_table):
            counts[label][emo] = counts[label].get(emo, 0) + 1
    totals = [sum(c.values()) for c in counts]
    emoticons = sorted(set().union(*counts))
    table = {}
    for emo in emoticons:
        k_e = sum(1 for c in counts if emo in c)
        idf = math.log((1 + K) / (1 + k_e)) + 1
        table[emo] = tuple(
            (counts[c].get(emo, 0) / totals[c] if totals[c] else 0.0) * idf
            for c in range(K)
        )
    return EmoticonTfidfModel(table=table, num_classes=K, fitted=True)


def emoticon_tfidf_transform(
    model: EmoticonTfidfModel, snapshot_text: str, emoticon_table: Sequence[str]
) -> np.ndarray:
    """Sum of fitted per-class weights over emoticon occurrences."""
    if not model.fitted:
        raise NotFittedError("emoticon TF-IDF model used before fitting")
    out = np.zeros(model.num_classes)
    for emo in find_emoticons(snapshot_text, emoticon_table):
        weights = model.table.get(emo)
        if weights is not None:
            out += np.asarray(weights)
    return out


@dataclass(frozen=True)
class FeatureScaler:
    """Per-feature z-score statistics fitted on the training split."""

    mean: np.ndarray
    std: np.ndarray

    def to_json(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureScaler":
        return cls(mean=np.asarray(obj["mean"], dtype=np.float64),
                   std=np.asarray(obj["std"], dtype=np.float64))


def scaler_fit(vectors: Sequence[np.ndarray] | np.ndarray) -> FeatureScaler:
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2 or len(X) < 2:
        raise ValueError(f"scaler needs >= 2 vectors, got array of shape {X.shape}")
    return FeatureScaler(mean=X.mean(axis=0), std=np.maximum(X.std(axis=0), 1e-8))


def scaler_apply(scaler: FeatureScaler, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != scaler.mean.shape[0]:
        raise ShapeMismatchError(
            f"vector width {v.shape[-1]} != scaler width {scaler.mean.shape[0]}"
        )
    return (v - scaler.mean) / scaler.std


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    schema: tuple[str, ...]

    def __post_init__(self):
        if self.values.shape != (len(self.schema),):
            raise ShapeMismatchError(
                f"{self.values.shape} values for {len(self.schema)} schema names"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite feature value")


def feature_schema(profile: str) -> tuple[str, ...]:
    """Ordered feature names for a profile; the order is serialized with models."""
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}; expected one of {PROFILES}")
    names = [f"emotion_{n}" for n in EMOTION_NAMES]
    names += [f"pos_{g}" for g in POS_GROUPS]
    if profile == "trac":
        names.append("punctuation_count")
    names += [f"sentiment_{n}" for n in ("positive", "negative", "neutral")]
    names += [f"topic_{c}" for c in TOPIC_CATEGORIES]
    if profile == "trac":
        names += [f"emoticon_tfidf_{c}" for c in range(EMOTICON_CLASSES)]
    return tuple(names)


@dataclass(frozen=True)
class FeatureExtractor:
    """Immutable bundle of lexicons plus corpus-fitted components."""

    emotion_lexicon: EmotionLexicon
    category_lexicon: CategoryLexicon
    sentiment_lexicon: SentimentLexicon
    pos_tagger: PosTagger
    emoticon_table: tuple[str, ...]
    emoticon_model: EmoticonTfidfModel | None = None

    def with_emoticon_model(self, model: EmoticonTfidfModel) -> "FeatureExtractor":
        return replace(self, emoticon_model=model)


def extract_features(
    doc: ProcessedDocument, resources: FeatureExtractor, profile: str
) -> FeatureVector:
    """Concatenate the feature groups in fixed schema order."""
    schema = feature_schema(profile)
    parts = [
        emotion_scores(doc.tokens, resources.emotion_lexicon),
        pos_frequencies(doc.tokens, resources.pos_tagger),
    ]
    if profile == "trac":
        parts.append(np.array([punctuation_count(doc.snapshot_text)]))
    parts.append(sentiment_scores(doc.snapshot_text, resources.sentiment_lexicon))
    parts.append(topic_signals(doc.tokens, resources.category_lexicon))
    if profile == "trac":
        model = resources.emoticon_model
        if model is None or not model.fitted:
            raise NotFittedError("trac profile requires a fitted emoticon TF-IDF model")
        if model.num_classes != EMOTICON_CLASSES:
            raise ConfigError(
                f"emoticon model has {model.num_classes} classes, profile needs "
                f"{EMOTICON_CLASSES}"
            )
        parts.append(emoticon_tfidf_transform(model, doc.snapshot_text,
                                              resources.emoticon_table))
    return FeatureVector(values=np.concatenate(parts), schema=schema)


def load_emotion_lexicon(path) -> EmotionLexicon:
    expected = ["word", *EMOTION_NAMES]
    rows = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected:
            raise ResourceError(f"{path}: header must be {expected}, got {header}")
        for lineno, fields in enumerate(reader, start=2):
            if len(fields) != len(expected):
                raise ResourceError(f"{path}: line {lineno}: wrong field count")
            try:
                rows[fields[0]] = tuple(float(v) for v in fields[1:])
            except ValueError as exc:
                raise ResourceError(f"{path}: line {lineno}: {exc}") from exc
    return EmotionLexicon(rows=rows)


def load_category_lexicon(path) -> CategoryLexicon:
    categories = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ResourceError(f"{path}: line {lineno}: expected category<TAB>words")
            categories[parts[0]] = frozenset(w for w in parts[1].split(",") if w)
    try:
        return CategoryLexicon(categories=categories)
    except ValueError as exc:
        raise ResourceError(f"{path}: {exc}") from exc


def load_sentiment_lexicon(path) -> SentimentLexicon:
    valences = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ResourceError(f"{path}: line {lineno}: expected word<TAB>valence")
            try:
                valences[parts[0]] = float(parts[1])
            except ValueError as exc:
                raise ResourceError(f"{path}: line {lineno}: {exc}") from exc
    try:
        return SentimentLexicon(valences=valences)
    except ValueError as exc:
        raise ResourceError(f"{path}: {exc}") from exc


def load_emoticon_table(path) -> tuple[str, ...]:
    table = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                table.append(line)
    return tuple(table)


@lru_cache(maxsize=1)
def load_default_resources() -> FeatureExtractor:
    """Extractor backed by the bundled lexicon files (emoticon model unfitted)."""
    return FeatureExtractor(
        emotion_lexicon=load_emotion_lexicon(resource_path("emotion.csv")),
        category_lexicon=load_category_lexicon(resource_path("empath.tsv")),
        sentiment_lexicon=load_sentiment_lexicon(resource_path("sentiment.tsv")),
        pos_tagger=PosTagger(lexicon=DEFAULT_POS_LEXICON),
        emoticon_table=load_emoticon_table(resource_path("emoticons.txt")),
    )

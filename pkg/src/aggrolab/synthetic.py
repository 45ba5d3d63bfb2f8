"""Deterministic keyword-separable corpora for smoke tests and experiments.

Each class owns a disjoint keyword pool; documents mix class keywords with
shared filler words, so any model that can key on token identity separates
the classes.  Texts are short (8-11 tokens) to keep end-to-end training
runs fast, and a rotating subset carries class-typical emoticons and
exclamation marks so the handcrafted feature path is exercised too.
"""

from __future__ import annotations

from .corpus import Document, DatasetSplit, KAGGLE_SCHEMA, LabelSchema, TRAC_SCHEMA, make_split
from .errors import ConfigError
from .numerics import rng_stream

# Pools deliberately avoid abbreviation-map keys and punctuation so that
# normalization is a near-identity on these texts.
_OVERT_WORDS = (
    "smash", "destroy", "idiot", "hate", "punch", "stupid",
    "trash", "fool", "attack", "fight",
)
_COVERT_WORDS = (
    "genius", "obviously", "brilliant", "sure", "whatever",
    "logic", "shame", "wow", "slow", "clap",
)
_CALM_WORDS = (
    "thanks", "lovely", "weather", "morning", "friend",
    "great", "peace", "music", "happy", "cricket",
)
_FILLER_WORDS = (
    "the", "this", "that", "here", "there", "today",
    "people", "about", "with", "some", "more", "again",
)

_CLASS_WORDS = {"OAG": _OVERT_WORDS, "CAG": _COVERT_WORDS, "NAG": _CALM_WORDS,
                "AGG": _OVERT_WORDS}
_CLASS_EMOTICONS = {"OAG": ":(", "CAG": "-_-", "NAG": ":)", "AGG": ":(("}
_SOURCES = ("facebook", "twitter")


def _render(label: str, rng, *, decorate: bool) -> str:
    keywords = _CLASS_WORDS[label]
    n_tokens = int(rng.integers(8, 12))
    n_key = max(3, n_tokens // 2)
    words = [keywords[int(i)] for i in rng.integers(0, len(keywords), n_key)]
    words += [_FILLER_WORDS[int(i)] for i in
              rng.integers(0, len(_FILLER_WORDS), n_tokens - n_key)]
    order = rng.permutation(len(words))
    text = " ".join(words[i] for i in order)
    if decorate:
        text = f"{text} {_CLASS_EMOTICONS[label]}"
        if label in ("OAG", "AGG"):
            text += " !!"
    return text


def make_synthetic_corpus(
    num_docs: int = 90,
    seed: int = 7,
    schema: LabelSchema = TRAC_SCHEMA,
    *,
    tag: str = "train",
) -> list[Document]:
    """Balanced labeled documents; the same (num_docs, seed, tag) always
    yields the same corpus.  ``tag`` separates e.g. train and test pools."""
    if num_docs < schema.K:
        raise ConfigError(
            f"need at least {schema.K} documents for {schema.K} classes, got {num_docs}"
        )
    docs = []
    for i in range(num_docs):
        label = i % schema.K
        rng = rng_stream(seed, "synthetic", tag, i)
        docs.append(Document(
            id=f"syn-{tag}-{i:03d}",
            raw_text=_render(schema.names[label], rng, decorate=(i % 3 == 0)),
            label=label,
            source=_SOURCES[i % len(_SOURCES)],
        ))
    return docs


def synthetic_split(
    num_train: int = 90,
    num_test: int = 30,
    seed: int = 7,
    schema: LabelSchema = TRAC_SCHEMA,
    validation_fraction: float = 0.2,
) -> DatasetSplit:
    """Train/validation split over one pool plus a disjoint held-out test pool."""
    pool = make_synthetic_corpus(num_train, seed, schema, tag="train")
    test = make_synthetic_corpus(num_test, seed, schema, tag="test")
    return make_split(pool, validation_fraction, seed, test=tuple(test))


def synthetic_benchmark(seed: int = 7, schema: LabelSchema = TRAC_SCHEMA) -> DatasetSplit:
    """The standard benchmark split: the full 90-document corpus as the
    training fold, with disjoint validation (18) and held-out test (30) pools."""
    return DatasetSplit(
        train=tuple(make_synthetic_corpus(90, seed, schema, tag="train")),
        validation=tuple(make_synthetic_corpus(18, seed, schema, tag="val")),
        test=tuple(make_synthetic_corpus(30, seed, schema, tag="test")),
        seed=seed,
    )


def synthetic_binary_split(
    num_train: int = 60,
    num_test: int = 20,
    seed: int = 7,
    validation_fraction: float = 0.2,
) -> DatasetSplit:
    """Two-class variant using the overt and calm pools only."""
    return synthetic_split(num_train, num_test, seed, KAGGLE_SCHEMA,
                           validation_fraction)

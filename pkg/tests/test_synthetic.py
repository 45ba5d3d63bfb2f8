"""The generated corpora must be balanced, deterministic, and clean."""

from collections import Counter

import pytest

from aggrolab.corpus import KAGGLE_SCHEMA, TRAC_SCHEMA
from aggrolab.errors import ConfigError
from aggrolab.preprocess import default_rules, normalize_document
from aggrolab.synthetic import (
    _CALM_WORDS,
    _COVERT_WORDS,
    _FILLER_WORDS,
    _OVERT_WORDS,
    make_synthetic_corpus,
    synthetic_benchmark,
    synthetic_binary_split,
    synthetic_split,
)

ALL_WORDS = set(_OVERT_WORDS + _COVERT_WORDS + _CALM_WORDS + _FILLER_WORDS)


def test_default_corpus_is_balanced():
    docs = make_synthetic_corpus(90, seed=7)
    assert len(docs) == 90
    assert Counter(TRAC_SCHEMA.names[d.label] for d in docs) == \
           {"OAG": 30, "CAG": 30, "NAG": 30}


def test_same_seed_same_corpus():
    a = make_synthetic_corpus(30, seed=5)
    b = make_synthetic_corpus(30, seed=5)
    assert [(d.id, d.raw_text, d.label) for d in a] == \
           [(d.id, d.raw_text, d.label) for d in b]


def test_different_seeds_differ():
    a = make_synthetic_corpus(30, seed=5)
    b = make_synthetic_corpus(30, seed=6)
    assert [d.raw_text for d in a] != [d.raw_text for d in b]


def test_different_tags_give_disjoint_pools():
    train = make_synthetic_corpus(30, seed=7, tag="train")
    test = make_synthetic_corpus(30, seed=7, tag="test")
    assert {d.id for d in train}.isdisjoint(d.id for d in test)
    assert [d.raw_text for d in train] != [d.raw_text for d in test]


def test_word_pools_are_disjoint_across_classes():
    assert set(_OVERT_WORDS).isdisjoint(_COVERT_WORDS)
    assert set(_OVERT_WORDS).isdisjoint(_CALM_WORDS)
    assert set(_COVERT_WORDS).isdisjoint(_CALM_WORDS)
    assert set(_FILLER_WORDS).isdisjoint(_OVERT_WORDS + _COVERT_WORDS + _CALM_WORDS)


def test_normalization_keeps_only_pool_words():
    rules = default_rules()
    for doc in make_synthetic_corpus(90, seed=7):
        tokens = normalize_document(doc, rules).tokens
        assert 8 <= len(tokens) <= 11
        assert set(tokens) <= ALL_WORDS


def test_no_pool_word_is_an_abbreviation_key():
    assert ALL_WORDS.isdisjoint(default_rules().abbreviation_map)


def test_every_third_document_is_decorated():
    docs = make_synthetic_corpus(12, seed=7)
    emoticons = (":(", "-_-", ":)", ":((")
    for i, doc in enumerate(docs):
        has_emoticon = any(e in doc.raw_text for e in emoticons)
        assert has_emoticon == (i % 3 == 0)


def test_too_few_documents_rejected():
    with pytest.raises(ConfigError):
        make_synthetic_corpus(2, seed=7, schema=TRAC_SCHEMA)


def test_split_partitions_pool():
    split = synthetic_split(30, 9, seed=3, validation_fraction=0.2)
    assert len(split.train) == 24
    assert len(split.validation) == 6
    assert len(split.test) == 9
    pool_ids = {d.id for d in split.train} | {d.id for d in split.validation}
    assert len(pool_ids) == 30
    assert pool_ids.isdisjoint(d.id for d in split.test)


def test_benchmark_split_sizes():
    split = synthetic_benchmark(seed=7)
    assert (len(split.train), len(split.validation), len(split.test)) == (90, 18, 30)
    assert Counter(TRAC_SCHEMA.names[d.label] for d in split.train) == \
           {"OAG": 30, "CAG": 30, "NAG": 30}


def test_binary_split_uses_binary_schema():
    split = synthetic_binary_split(12, 4, seed=3)
    labels = {d.label for d in split.train} | {d.label for d in split.validation}
    assert labels <= {0, 1}
    assert Counter(KAGGLE_SCHEMA.names[d.label]
                   for d in make_synthetic_corpus(12, 3, KAGGLE_SCHEMA)) == \
           {"NAG": 6, "AGG": 6}

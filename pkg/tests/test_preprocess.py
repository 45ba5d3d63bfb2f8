"""Normalization chain behaviour: pipeline order, snapshots, idempotence."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aggrolab.errors import ResourceError
from aggrolab.preprocess import (
    NormalizationRules,
    default_rules,
    emoji_to_description,
    load_abbreviations,
    load_emoji_map,
    normalize,
    tokenize,
)


class TestTokenize:
    def test_plain_words(self):
        assert tokenize("well said sonu") == ["well", "said", "sonu"]

    def test_empty(self):
        assert tokenize("") == []

    def test_whitespace_collapse(self):
        assert tokenize("a  b\tc") == ["a", "b", "c"]

    def test_punctuation_never_survives(self):
        assert tokenize("so... what?! (really)") == ["so", "what", "really"]

    def test_contractions_stay_whole(self):
        assert tokenize("don't stop") == ["don't", "stop"]

    def test_lone_apostrophes_dropped(self):
        assert tokenize("a '' b") == ["a", "b"]


class TestEmojiToDescription:
    def test_single(self):
        out = emoji_to_description("good \U0001F600", default_rules().emoji_map)
        assert out == "good grinning face"

    def test_no_emoji_is_identity(self):
        text = "plain  text   with   spacing"
        assert emoji_to_description(text, default_rules().emoji_map) is text

    def test_adjacent_repeats(self):
        out = emoji_to_description("\U0001F600\U0001F600", default_rules().emoji_map)
        assert out == "grinning face grinning face"

    def test_unmapped_emoji_removed(self):
        # U+1F9B4 (bone) is deliberately not in the bundled table.
        out = emoji_to_description("a \U0001F9B4 b", default_rules().emoji_map)
        assert out == "a b"

    def test_multi_codepoint_sequence(self):
        out = emoji_to_description("\U0001F1EE\U0001F1F3", default_rules().emoji_map)
        assert out == "flag india"


class TestNormalize:
    def test_abbreviation_expansion(self):
        doc = normalize("u r my friend nd u know")
        assert list(doc.tokens) == ["you", "r", "my", "friend", "and", "you", "know"]

    def test_url_removed_snapshot_keeps_punctuation(self):
        doc = normalize("see http://x.co now!!!")
        assert list(doc.tokens) == ["see", "now"]
        assert "!!!" in doc.snapshot_text
        assert "http://x.co" in doc.snapshot_text

    def test_truncation(self):
        doc = normalize(" ".join(f"w{i}" for i in range(300)))
        assert len(doc.tokens) == 200
        assert doc.original_length == 300

    def test_degenerate_input(self):
        assert normalize("").tokens == ()
        assert normalize("?!...").tokens == ()

    def test_lowercasing(self):
        assert list(normalize("WELL Said SONU").tokens) == ["well", "said", "sonu"]

    def test_abbreviation_behind_punctuation(self):
        # "u" only becomes a whole token once the comma is stripped.
        assert list(normalize("thank u, sir").tokens) == ["thank", "you", "sir"]

    def test_translator_hook_feeds_snapshot(self):
        rules = NormalizationRules(translator=lambda t: t.replace("acha", "okay"))
        doc = normalize("acha!", rules)
        assert doc.snapshot_text == "okay!"
        assert list(doc.tokens) == ["okay"]

    def test_emoji_in_tokens_and_snapshot(self):
        doc = normalize("nice \U0001F600")
        assert list(doc.tokens) == ["nice", "grinning", "face"]
        assert "\U0001F600" in doc.snapshot_text

    def test_emoticon_survives_in_snapshot_not_tokens(self):
        doc = normalize("great :) news")
        assert ":)" in doc.snapshot_text
        assert list(doc.tokens) == ["great", "news"]

    def test_deterministic(self):
        a = normalize("u said WHAT?! \U0001F621 http://t.co/x")
        b = normalize("u said WHAT?! \U0001F621 http://t.co/x")
        assert a == b

    @given(st.text(max_size=120))
    @settings(max_examples=150, deadline=None)
    def test_idempotent_on_rejoined_tokens(self, raw):
        first = normalize(raw)
        second = normalize(" ".join(first.tokens))
        assert second.tokens == first.tokens

    @given(st.text(max_size=120))
    @settings(max_examples=80, deadline=None)
    def test_tokens_are_clean(self, raw):
        doc = normalize(raw)
        assert len(doc.tokens) <= 200
        for token in doc.tokens:
            assert token == token.lower()
            assert "!" not in token and "?" not in token
            assert not token.startswith("http")


class TestRulesValidation:
    def test_uppercase_key_rejected(self):
        with pytest.raises(ValueError):
            NormalizationRules(abbreviation_map={"U": "you"})

    def test_expansion_that_is_a_key_rejected(self):
        with pytest.raises(ValueError):
            NormalizationRules(abbreviation_map={"u": "you", "yu": "u"})

    def test_punctuated_expansion_rejected(self):
        with pytest.raises(ValueError):
            NormalizationRules(abbreviation_map={"u": "you!"})

    def test_emoji_description_with_emoji_rejected(self):
        with pytest.raises(ValueError):
            NormalizationRules(emoji_map={"\U0001F600": "face \U0001F600"})

    def test_bad_url_pattern_rejected(self):
        with pytest.raises(Exception):
            NormalizationRules(url_pattern="[unclosed")


class TestResourceLoaders:
    def test_bundled_tables_load(self):
        rules = default_rules()
        assert rules.abbreviation_map["u"] == "you"
        assert rules.abbreviation_map["nd"] == "and"
        assert "r" not in rules.abbreviation_map
        assert rules.emoji_map["\U0001F600"] == "grinning face"

    def test_malformed_abbrev_line(self, tmp_path):
        p = tmp_path / "a.tsv"
        p.write_text("u\tyou\nbroken line\n")
        with pytest.raises(ResourceError, match="line 2"):
            load_abbreviations(p)

    def test_malformed_emoji_line(self, tmp_path):
        p = tmp_path / "e.tsv"
        p.write_text("ZZZZ\tthing\n")
        with pytest.raises(ResourceError, match="line 1"):
            load_emoji_map(p)

    def test_comments_and_blanks_skipped(self, tmp_path):
        p = tmp_path / "a.tsv"
        p.write_text("# comment\n\nu\tyou\n")
        assert load_abbreviations(p) == {"u": "you"}

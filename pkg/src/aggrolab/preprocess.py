"""Deterministic text normalization.

Each raw text passes through a fixed chain — pluggable translator hook,
snapshot capture, emoji-to-description conversion, lowercasing, abbreviation
expansion, URL removal, punctuation stripping, tokenization, truncation —
yielding both a snapshot (punctuation and emoticons intact, for the
handcrafted features) and a cleaned token sequence (for the models).
All functions are pure and safe to run document-parallel.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources as importlib_resources
from typing import Callable, Mapping

from .errors import ResourceError

DEFAULT_MAX_LEN = 200
DEFAULT_URL_PATTERN = r"(?:https?://|www\.)\S+"

# ASCII punctuation minus the apostrophe (kept so contractions survive as
# single tokens), plus punctuation common in code-mixed social media text.
_STRIP_CHARS = (string.punctuation.replace("'", "")
                + "¡¿«»‘’“”"
                + "–—…।॥、。")
_STRIP_TABLE = str.maketrans({c: " " for c in _STRIP_CHARS})

# Codepoint ranges treated as emoji for detection/removal purposes: pictographs
# and transport/supplemental symbols, dingbats, misc symbols, variation
# selectors and the zero-width joiner used in composed sequences.
_EMOJI_RANGES = (
    (0x1F000, 0x1FAFF),
    (0x2600, 0x27BF),
    (0x2B00, 0x2BFF),
    (0xFE00, 0xFE0F),
    (0x200D, 0x200D),
)


def _is_emoji_char(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _EMOJI_RANGES)


def _identity(text: str) -> str:
    return text


@dataclass(frozen=True)
class NormalizationRules:
    """Immutable configuration for :func:`normalize`.

    ``abbreviation_map`` doubles as the spelling-correction table (same
    whole-token mechanism); ``emoji_map`` keys are literal codepoint
    sequences; ``translator`` is a text→text hook defaulting to identity.
    """

    abbreviation_map: Mapping[str, str] = field(default_factory=dict)
    emoji_map: Mapping[str, str] = field(default_factory=dict)
    url_pattern: str = DEFAULT_URL_PATTERN
    translator: Callable[[str], str] = _identity

    def __post_init__(self):
        for key, value in self.abbreviation_map.items():
            if not key or key != key.lower() or any(c.isspace() for c in key):
                raise ValueError(
                    f"abbreviation key {key!r} must be lowercase and whitespace-free"
                )
            # Expansions must come out the far end of the pipeline untouched,
            # otherwise repeated normalization would keep rewriting them.
            for word in value.split():
                if word in self.abbreviation_map:
                    raise ValueError(
                        f"abbreviation {key!r} expands to {word!r}, itself a key"
                    )
                if word != word.lower() or any(c in _STRIP_CHARS for c in word):
                    raise ValueError(
                        f"abbreviation {key!r} has non-normalized expansion {value!r}"
                    )
        for seq, desc in self.emoji_map.items():
            if not seq:
                raise ValueError("empty emoji codepoint sequence")
            if any(_is_emoji_char(c) for c in desc):
                raise ValueError(f"emoji description {desc!r} contains emoji codepoints")
        re.compile(self.url_pattern)


@dataclass(frozen=True)
class ProcessedDocument:
    """Normalization output: feature snapshot plus model-ready tokens."""

    id: str
    snapshot_text: str
    tokens: tuple[str, ...]
    original_length: int


def emoji_to_description(text: str, emoji_map: Mapping[str, str]) -> str:
    """Replace mapped emoji sequences with their descriptions, drop the rest.

    Text containing no emoji is returned unchanged (same object); when any
    replacement or removal happens, whitespace is re-collapsed so descriptions
    stand as separate words.
    """
    # Longest-first matching lets multi-codepoint sequences win over prefixes.
    keys = sorted(emoji_map, key=len, reverse=True)
    out: list[str] = []
    i, changed = 0, False
    n = len(text)
    while i < n:
        for key in keys:
            if text.startswith(key, i):
                out.append(f" {emoji_map[key]} ")
                i += len(key)
                changed = True
                break
        else:
            ch = text[i]
            if _is_emoji_char(ch):
                out.append(" ")
                changed = True
            else:
                out.append(ch)
            i += 1
    if not changed:
        return text
    return " ".join("".join(out).split())


def tokenize(text: str) -> list[str]:
    """Strip punctuation, then split on Unicode whitespace; no empty tokens."""
    words = text.translate(_STRIP_TABLE).split()
    return [w for w in words if w.strip("'")]


def _expand(tokens: list[str], table: Mapping[str, str]) -> list[str]:
    out: list[str] = []
    for token in tokens:
        expansion = table.get(token)
        out.extend(expansion.split() if expansion is not None else (token,))
    return out


def normalize(
    raw: str,
    rules: NormalizationRules | None = None,
    *,
    doc_id: str = "",
    max_len: int = DEFAULT_MAX_LEN,
) -> ProcessedDocument:
    """Run the full normalization chain over one raw text.

    Degenerate input yields an empty token list rather than an error. The
    output is a fixed point: normalizing the space-joined tokens again gives
    the same tokens.
    """
    if rules is None:
        rules = default_rules()
    text = rules.translator(raw)
    snapshot = text
    text = emoji_to_description(text, rules.emoji_map)
    text = text.lower()
    # First expansion pass sees punctuation-bearing keys before stripping.
    text = " ".join(_expand(text.split(), rules.abbreviation_map))
    text = re.sub(rules.url_pattern, " ", text)
    tokens = tokenize(text)
    # Second pass catches words that only become whole tokens once punctuation
    # is gone (e.g. "u." -> "u"), keeping normalization idempotent.
    tokens = _expand(tokens, rules.abbreviation_map)
    original_length = len(tokens)
    return ProcessedDocument(
        id=doc_id,
        snapshot_text=snapshot,
        tokens=tuple(tokens[:max_len]),
        original_length=original_length,
    )


def normalize_document(doc, rules: NormalizationRules | None = None,
                       *, max_len: int = DEFAULT_MAX_LEN) -> ProcessedDocument:
    """Normalize a corpus Document, carrying its id through."""
    return normalize(doc.raw_text, rules, doc_id=doc.id, max_len=max_len)


def load_abbreviations(path) -> dict[str, str]:
    """Parse a ``key<TAB>expansion`` table (UTF-8, '#' comments allowed)."""
    table: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ResourceError(f"{path}: line {lineno}: expected key<TAB>expansion")
            table[parts[0]] = parts[1]
    return table


def load_emoji_map(path) -> dict[str, str]:
    """Parse a ``hex-codepoints<TAB>description`` table into literal sequences."""
    table: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ResourceError(
                    f"{path}: line {lineno}: expected codepoints<TAB>description"
                )
            try:
                seq = "".join(chr(int(h, 16)) for h in parts[0].split())
            except (ValueError, OverflowError) as exc:
                raise ResourceError(f"{path}: line {lineno}: {exc}") from exc
            table[seq] = parts[1]
    return table


def resource_path(name: str):
    """Path of a bundled resource file."""
    return importlib_resources.files("aggrolab.resources") / name


@lru_cache(maxsize=1)
def default_rules() -> NormalizationRules:
    """Rules backed by the bundled abbreviation and emoji tables."""
    return NormalizationRules(
        abbreviation_map=load_abbreviations(resource_path("abbrev.tsv")),
        emoji_map=load_emoji_map(resource_path("emoji.tsv")),
    )

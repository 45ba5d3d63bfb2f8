"""Dataset loading, validation and splitting.

Three on-disk formats are supported and converted into one canonical CSV
(header ``id,text,label,source``): a headerless three-column CSV with string
labels, a JSON-lines dump of ``{"content": ..., "annotation": {"label":
["0"|"1"]}}`` objects, and the canonical CSV itself. Loaded datasets are
immutable lists of :class:`Document` and safe to share across threads.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataFormatError, UnknownLabelError
from .numerics import rng_stream

log = logging.getLogger(__name__)

SOURCES = ("facebook", "twitter", "other")
FORMATS = ("trac_csv", "kaggle_jsonl", "canonical_csv")


@dataclass(frozen=True)
class LabelSchema:
    """Ordered class names; the order is fixed and serialized with models."""

    names: tuple[str, ...]

    def __post_init__(self):
        if len(self.names) not in (2, 3):
            raise ValueError(f"schema supports 2 or 3 classes, got {len(self.names)}")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate class names in {self.names}")

    @property
    def K(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownLabelError(
                f"unknown label {name!r}; expected one of {list(self.names)}"
            ) from None


TRAC_SCHEMA = LabelSchema(("OAG", "CAG", "NAG"))
KAGGLE_SCHEMA = LabelSchema(("NAG", "AGG"))


@dataclass(frozen=True)
class Document:
    """One social-media text with an optional gold label."""

    id: str
    raw_text: str
    label: int | None = None
    source: str = "other"

    def __post_init__(self):
        if not self.raw_text.strip():
            raise DataFormatError(f"document {self.id!r} has empty text")
        if self.source not in SOURCES:
            raise DataFormatError(
                f"document {self.id!r}: unknown source {self.source!r}"
            )


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[Document, ...]
    validation: tuple[Document, ...]
    test: tuple[Document, ...]
    seed: int


def _check_label_index(doc_id: str, label: int, schema: LabelSchema) -> int:
    if not 0 <= label < schema.K:
        raise UnknownLabelError(
            f"document {doc_id!r}: label index {label} outside schema of K={schema.K}"
        )
    return label


def _read_trac_csv(path: Path, schema: LabelSchema, default_source: str) -> list[Document]:
    docs = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            if not fields:
                continue
            if len(fields) != 3:
                raise DataFormatError(
                    f"{path}: row {lineno}: expected 3 fields, got {len(fields)}"
                )
            doc_id, text, label_name = fields
            if not text.strip():
                raise DataFormatError(f"{path}: row {lineno}: empty text")
            docs.append(Document(
                id=doc_id,
                raw_text=text,
                label=schema.index_of(label_name.strip()),
                source=default_source,
            ))
    return docs


def _read_kaggle_jsonl(path: Path, schema: LabelSchema, default_source: str) -> list[Document]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                text = obj["content"]
                flag = obj["annotation"]["label"][0]
            except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
                raise DataFormatError(f"{path}: row {lineno}: {exc}") from exc
            if flag not in ("0", "1"):
                raise UnknownLabelError(
                    f"{path}: row {lineno}: unknown label {flag!r} (expected '0' or '1')"
                )
            label = schema.index_of("AGG") if flag == "1" else schema.index_of("NAG")
            docs.append(Document(
                id=str(obj.get("id", lineno)),
                raw_text=text,
                label=label,
                source=default_source,
            ))
    return docs


def _read_canonical_csv(path: Path, schema: LabelSchema, default_source: str) -> list[Document]:
    docs = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = ["id", "text", "label", "source"]
        if reader.fieldnames != expected:
            raise DataFormatError(
                f"{path}: canonical header must be {expected}, got {reader.fieldnames}"
            )
        for lineno, rowdict in enumerate(reader, start=2):
            if any(v is None for v in rowdict.values()):
                raise DataFormatError(f"{path}: row {lineno}: missing fields")
            label_name = rowdict["label"].strip()
            label = schema.index_of(label_name) if label_name else None
            source = rowdict["source"].strip() or default_source
            if not rowdict["text"].strip():
                raise DataFormatError(f"{path}: row {lineno}: empty text")
            docs.append(Document(
                id=rowdict["id"], raw_text=rowdict["text"], label=label, source=source,
            ))
    return docs


_READERS = {
    "trac_csv": _read_trac_csv,
    "kaggle_jsonl": _read_kaggle_jsonl,
    "canonical_csv": _read_canonical_csv,
}


def load_documents(
    path,
    format: str,
    schema: LabelSchema,
    default_source: str = "other",
) -> list[Document]:
    """Load all rows of ``path`` as Documents, rejecting unmapped labels."""
    if format not in _READERS:
        raise DataFormatError(f"unknown format {format!r}; expected one of {FORMATS}")
    if default_source not in SOURCES:
        raise DataFormatError(f"unknown source {default_source!r}")
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"no such file: {path}")
    docs = _READERS[format](path, schema, default_source)
    if not docs:
        log.warning("loaded 0 documents from %s", path)
    return docs


def write_canonical_csv(docs: Iterable[Document], path, schema: LabelSchema) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "text", "label", "source"])
        for doc in docs:
            label_name = "" if doc.label is None else schema.names[doc.label]
            writer.writerow([doc.id, doc.raw_text, label_name, doc.source])


def make_split(
    pool: Sequence[Document],
    validation_fraction: float,
    seed: int,
    test: Sequence[Document] = (),
) -> DatasetSplit:
    """Deterministic shuffle of ``pool`` into train/validation.

    The validation side gets ``round(fraction * len(pool))`` documents; the
    shuffle is plain (unstratified) and reproducible from the seed.
    """
    if not 0.0 < validation_fraction < 1.0:
        raise ValueError(f"validation_fraction {validation_fraction} outside (0, 1)")
    if len(pool) < 2:
        raise ValueError(f"pool of {len(pool)} documents cannot be split")
    order = rng_stream(seed, "split").permutation(len(pool))
    n_val = int(round(validation_fraction * len(pool)))
    shuffled = [pool[i] for i in order]
    return DatasetSplit(
        train=tuple(shuffled[n_val:]),
        validation=tuple(shuffled[:n_val]),
        test=tuple(test),
        seed=seed,
    )


def class_distribution(docs: Sequence[Document], schema: LabelSchema) -> list[int]:
    """Per-class document counts in schema order; all docs must be labeled."""
    counts = [0] * schema.K
    for doc in docs:
        if doc.label is None:
            raise UnknownLabelError(f"document {doc.id!r} is unlabeled")
        _check_label_index(doc.id, doc.label, schema)
        counts[doc.label] += 1
    return counts


def relabel(doc: Document, label: int | None) -> Document:
    return replace(doc, label=label)

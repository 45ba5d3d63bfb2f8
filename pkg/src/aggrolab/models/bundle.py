"""Trained-model persistence.

A bundle file is: magic ``AGGR``, little-endian uint32 format version,
little-endian uint64 header length, a UTF-8 JSON header, then a raw payload
of little-endian float32 tensors. The header carries everything needed to
predict standalone — architecture id and config, label schema, feature
profile, vocabulary, fitted scaler statistics and emoticon TF-IDF table
(stored as JSON numbers so they round-trip exactly) — plus the name, shape
and payload offset of every tensor. Serialization is canonical (sorted keys,
sorted tensor order), so identical bundles produce identical bytes.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..corpus import LabelSchema
from ..errors import BundleFormatError
from ..features import EmoticonTfidfModel, FeatureScaler
from ..numerics import Tensor

MAGIC = b"AGGR"
FORMAT_VERSION = 1
_HEAD = struct.Struct("<4sIQ")  # magic, version, header length


@dataclass(frozen=True)
class ModelBundle:
    architecture: str
    config: Mapping[str, object]
    params: Mapping[str, Tensor]
    scaler: FeatureScaler
    schema: LabelSchema
    profile: str
    vocabulary: Mapping[str, int]
    emoticon_model: EmoticonTfidfModel | None = None
    version: int = FORMAT_VERSION

    @property
    def num_classes(self) -> int:
        return self.schema.K


def save_bundle(bundle: ModelBundle, path) -> None:
    tensors = {}
    chunks = []
    offset = 0
    for name in sorted(bundle.params):
        data = np.ascontiguousarray(bundle.params[name].data, dtype="<f4")
        tensors[name] = {"dtype": "float32", "shape": list(data.shape),
                         "offset": offset}
        chunks.append(data.tobytes())
        offset += len(chunks[-1])
    meta = {
        "architecture": bundle.architecture,
        "config": dict(bundle.config),
        "schema": list(bundle.schema.names),
        "profile": bundle.profile,
        "vocabulary": dict(bundle.vocabulary),
        "scaler": bundle.scaler.to_json(),
        "emoticon_model": (bundle.emoticon_model.to_json()
                           if bundle.emoticon_model is not None else None),
    }
    header = json.dumps({"meta": meta, "tensors": tensors},
                        sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(MAGIC, bundle.version, len(header)))
        fh.write(header)
        for chunk in chunks:
            fh.write(chunk)


def load_bundle(path) -> ModelBundle:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEAD.size:
        raise BundleFormatError(f"{path}: file shorter than the fixed header")
    magic, version, header_len = _HEAD.unpack_from(blob)
    if magic != MAGIC:
        raise BundleFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise BundleFormatError(
            f"{path}: unsupported format version {version} (expected {FORMAT_VERSION})"
        )
    header_end = _HEAD.size + header_len
    if header_end > len(blob):
        raise BundleFormatError(f"{path}: truncated header")
    try:
        header = json.loads(blob[_HEAD.size:header_end].decode("utf-8"))
        meta = header["meta"]
        tensor_specs = header["tensors"]
    except (ValueError, KeyError) as exc:
        raise BundleFormatError(f"{path}: malformed header: {exc}") from exc
    payload = blob[header_end:]
    params = {}
    for name, spec in tensor_specs.items():
        try:
            shape = tuple(spec["shape"])
            offset = spec["offset"]
            if spec["dtype"] != "float32":
                raise BundleFormatError(f"{path}: tensor {name!r} has unsupported "
                                        f"dtype {spec['dtype']!r}")
        except (KeyError, TypeError) as exc:
            raise BundleFormatError(f"{path}: malformed tensor spec for {name!r}") from exc
        size = int(np.prod(shape, dtype=np.int64)) * 4
        if offset < 0 or offset + size > len(payload):
            raise BundleFormatError(f"{path}: truncated payload for tensor {name!r}")
        data = np.frombuffer(payload, dtype="<f4", count=size // 4,
                             offset=offset).reshape(shape)
        params[name] = Tensor(data.copy())
    try:
        return ModelBundle(
            architecture=meta["architecture"],
            config=meta["config"],
            params=params,
            scaler=FeatureScaler.from_json(meta["scaler"]),
            schema=LabelSchema(tuple(meta["schema"])),
            profile=meta["profile"],
            vocabulary=meta["vocabulary"],
            emoticon_model=(EmoticonTfidfModel.from_json(meta["emoticon_model"])
                            if meta["emoticon_model"] is not None else None),
            version=version,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleFormatError(f"{path}: malformed metadata: {exc}") from exc

"""Writers (and validating readers) for the detection engine's file formats.

The byte layouts are a wire contract shared with the engine; this module
implements them independently so the exporter stays a standalone
package.  All integers little-endian, all text UTF-8.

Embedding store: magic ``ZOSDEMB1``, count u32, dim u32, then per record
key_len u32, key bytes, dim float32 values.  Candidate logits: JSON
Lines, one ``{"image_id", "stored_k", "positions"}`` object per image,
positions sorted by logprob descending then word ascending.
"""
from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"ZOSDEMB1"
NORM_ATOL = 1e-4


class FormatError(ValueError):
    """A payload violates the wire contract."""


def write_embedding_store(vectors: dict[str, np.ndarray], path) -> None:
    """Write key -> unit-norm float32 vector records atomically."""
    path = Path(path)
    dims = {int(np.asarray(v).shape[0]) for v in vectors.values()}
    if len(dims) > 1:
        raise FormatError(f"vectors disagree on dim: {sorted(dims)}")
    dim = dims.pop() if dims else 0

    blob = bytearray(MAGIC)
    blob += struct.pack("<II", len(vectors), dim)
    for key, value in vectors.items():
        arr = np.asarray(value, dtype=np.float32)
        if arr.ndim != 1:
            raise FormatError(f"vector for {key!r} is not 1-D")
        norm = float(np.linalg.norm(arr.astype(np.float64)))
        if abs(norm - 1.0) > NORM_ATOL:
            raise FormatError(f"vector for {key!r} has norm {norm!r}, not unit")
        encoded = key.encode("utf-8")
        blob += struct.pack("<I", len(encoded))
        blob += encoded
        blob += arr.astype("<f4").tobytes()
    _atomic_write_bytes(path, bytes(blob))


def read_embedding_store(path) -> dict[str, np.ndarray]:
    data = Path(path).read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: bad magic")
    offset = len(MAGIC)
    count, dim = struct.unpack_from("<II", data, offset)
    offset += 8
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (key_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        key = data[offset : offset + key_len].decode("utf-8")
        offset += key_len
        if key in out:
            raise FormatError(f"{path}: duplicate key {key!r}")
        out[key] = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += 4 * dim
    if offset != len(data):
        raise FormatError(f"{path}: length does not match header arithmetic")
    return out


def write_logits_file(records: list[dict], path) -> None:
    """Write per-image top-k records, enforcing the sortedness invariant."""
    lines = []
    for record in records:
        stored_k = int(record["stored_k"])
        for pos_index, position in enumerate(record["positions"]):
            if len(position) > stored_k:
                raise FormatError(
                    f"{record['image_id']}: position {pos_index} exceeds stored_k"
                )
            if list(position) != sorted(position, key=lambda e: (-e[1], e[0].lower(), e[0])):
                raise FormatError(
                    f"{record['image_id']}: position {pos_index} is not sorted"
                )
        lines.append(json.dumps(record, ensure_ascii=False))
    _atomic_write_bytes(
        Path(path), ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")
    )


def read_logits_words(path) -> set[str]:
    """All words appearing anywhere in a logits file (closure checking)."""
    words: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            for position in record["positions"]:
                for word, _ in position:
                    words.add(word)
    return words


def read_split_file(path) -> dict:
    record = json.loads(Path(path).read_text(encoding="utf-8"))
    for field in ("name", "seen", "unseen", "images"):
        if field not in record:
            raise FormatError(f"{path}: split file lacks {field!r}")
    return record


def _atomic_write_bytes(path: Path, payload: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)

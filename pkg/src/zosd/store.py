"""Persistence formats and embedding backends.

Two on-disk formats are bit-exact contracts (all integers little-endian,
all text UTF-8):

* Embedding store (binary): magic ``ZOSDEMB1``, count u32, dim u32,
  then ``count`` records of (key_len u32, key bytes, dim float32 values).
  Keys are unique, every vector unit-norm within 1e-4, and the file
  length must match the header arithmetic exactly.
* Candidate logits (JSON Lines): one object per image,
  ``{"image_id": str, "stored_k": int, "positions": [[[word, logprob], ...], ...]}``
  with per-position arrays sorted by logprob descending then word
  ascending.  Sortedness is an on-disk invariant; the parser rejects
  violations rather than repairing them.

The module also provides the embedding-backend contract plus the
deterministic synthetic backend the test suite is built on.  Synthetic
vectors are derived from a cross-language integer recipe (FNV-1a 64,
splitmix64, Box-Muller) so any conforming implementation reproduces
them bit for bit.
"""
from __future__ import annotations

import math
import os
import json
import struct
import logging
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .candidates import DecoderOutput, PositionTopK
from .core import (
    DEFAULT_TEMPLATE,
    EmbeddingVector,
    PromptTemplate,
    normalize,
    render_prompt,
)
from .errors import (
    BadMagicError,
    DimMismatchError,
    DuplicateKeyError,
    MissingDecoderOutputError,
    MissingImageError,
    MissingTextEmbeddingError,
    StoreFormatError,
    TruncatedFileError,
    ZeroVectorError,
)

logger = logging.getLogger(__name__)

MAGIC = b"ZOSDEMB1"

_U64_MASK = (1 << 64) - 1
FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


# ---------------------------------------------------------------------------
# binary embedding store
# ---------------------------------------------------------------------------

def write_store(vectors: Mapping[str, EmbeddingVector], path) -> None:
    """Write a key -> unit-vector mapping in the binary store format.

    Record order follows the mapping's iteration order, so a
    write/read/write cycle is a byte-level fixed point.  The file is
    written atomically (temp file + rename).
    """
    path = Path(path)
    items = [(key, _as_embedding(value)) for key, value in vectors.items()]
    dims = {vec.dim for _, vec in items}
    if len(dims) > 1:
        raise DimMismatchError(f"store vectors disagree on dim: {sorted(dims)}")
    dim = dims.pop() if dims else 0

    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<II", len(items), dim)
    for key, vec in items:
        encoded = key.encode("utf-8")
        blob += struct.pack("<I", len(encoded))
        blob += encoded
        blob += vec.values.astype("<f4").tobytes()

    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(bytes(blob))
    os.replace(tmp, path)


def read_store(path) -> dict[str, EmbeddingVector]:
    """Read a binary embedding store into an insertion-ordered mapping."""
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC):
        raise TruncatedFileError(f"{path}: shorter than the magic header")
    if data[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {data[:len(MAGIC)]!r}")
    offset = len(MAGIC)
    if len(data) < offset + 8:
        raise TruncatedFileError(f"{path}: truncated header")
    count, dim = struct.unpack_from("<II", data, offset)
    offset += 8
    if count > 0 and dim == 0:
        raise StoreFormatError(f"{path}: {count} records with dim 0")

    out: dict[str, EmbeddingVector] = {}
    for _ in range(count):
        if len(data) < offset + 4:
            raise TruncatedFileError(f"{path}: truncated record header")
        (key_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        if len(data) < offset + key_len + 4 * dim:
            raise TruncatedFileError(f"{path}: truncated record body")
        key = data[offset : offset + key_len].decode("utf-8")
        offset += key_len
        values = np.frombuffer(data, dtype="<f4", count=dim, offset=offset)
        offset += 4 * dim
        if key in out:
            raise DuplicateKeyError(f"{path}: duplicate key {key!r}")
        out[key] = EmbeddingVector(values)  # norm check -> NormViolationError
    if offset != len(data):
        raise StoreFormatError(f"{path}: {len(data) - offset} trailing bytes")
    return out


def _as_embedding(value) -> EmbeddingVector:
    if isinstance(value, EmbeddingVector):
        return value
    return EmbeddingVector(np.asarray(value, dtype=np.float32))


# ---------------------------------------------------------------------------
# candidate logits (JSON Lines)
# ---------------------------------------------------------------------------

def write_logits(outputs: Iterable[DecoderOutput], path) -> None:
    """Serialize decoder outputs to the JSONL candidate-logits format."""
    path = Path(path)
    lines = []
    for out in outputs:
        record = {
            "image_id": out.image_id,
            "stored_k": out.stored_k,
            "positions": [
                [[word, lp] for word, lp in pos.entries] for pos in out.positions
            ],
        }
        lines.append(json.dumps(record, ensure_ascii=False))
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    os.replace(tmp, path)


def read_logits(path) -> dict[str, DecoderOutput]:
    """Parse a candidate-logits JSONL file, enforcing on-disk invariants."""
    out: dict[str, DecoderOutput] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                image_id = record["image_id"]
                stored_k = int(record["stored_k"])
                positions = tuple(
                    PositionTopK(tuple((str(w), float(lp)) for w, lp in pos))
                    for pos in record["positions"]
                )
                decoded = DecoderOutput(image_id, positions, stored_k)
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise StoreFormatError(f"{path}:{lineno}: malformed record ({exc})") from exc
            except ValueError as exc:
                raise StoreFormatError(f"{path}:{lineno}: {exc}") from exc
            if image_id in out:
                raise DuplicateKeyError(f"{path}:{lineno}: duplicate image id {image_id!r}")
            out[image_id] = decoded
    return out


class CandidateLogitsStore:
    """In-memory, immutable view over the decoder outputs of a dataset."""

    def __init__(self, outputs: Mapping[str, DecoderOutput]):
        self._outputs = dict(outputs)

    @classmethod
    def from_file(cls, path) -> "CandidateLogitsStore":
        return cls(read_logits(path))

    def get(self, image_id: str) -> DecoderOutput:
        try:
            return self._outputs[image_id]
        except KeyError:
            raise MissingDecoderOutputError(image_id) from None

    def __contains__(self, image_id: str) -> bool:
        return image_id in self._outputs

    def image_ids(self) -> tuple[str, ...]:
        return tuple(self._outputs)


# ---------------------------------------------------------------------------
# embedding backends
# ---------------------------------------------------------------------------

class EmbeddingBackend:
    """Provider of unit-norm image/text vectors.

    Implementations must be deterministic (identical queries return
    identical vectors) and safe for concurrent reads.
    """

    def embed_image(self, image_id: str) -> EmbeddingVector:
        raise NotImplementedError

    def embed_text(self, prompt: str) -> EmbeddingVector:
        raise NotImplementedError


class MappingBackend(EmbeddingBackend):
    """Backend over two pre-computed key -> vector mappings."""

    def __init__(
        self,
        images: Mapping[str, EmbeddingVector],
        texts: Mapping[str, EmbeddingVector],
    ):
        self._images = dict(images)
        self._texts = dict(texts)

    @classmethod
    def from_files(cls, images_path, texts_path) -> "MappingBackend":
        return cls(read_store(images_path), read_store(texts_path))

    def embed_image(self, image_id: str) -> EmbeddingVector:
        try:
            return self._images[image_id]
        except KeyError:
            raise MissingImageError(image_id) from None

    def embed_text(self, prompt: str) -> EmbeddingVector:
        try:
            return self._texts[prompt]
        except KeyError:
            raise MissingTextEmbeddingError(prompt, prompt=prompt) from None


# ---------------------------------------------------------------------------
# deterministic synthetic vectors
# ---------------------------------------------------------------------------

def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash (offset basis 0xcbf29ce484222325, prime 0x100000001b3)."""
    h = FNV_OFFSET_BASIS
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _U64_MASK
    return h


def splitmix64_uniforms(state: int, n: int) -> np.ndarray:
    """First ``n`` uniforms in (0, 1) of the splitmix64 stream seeded at ``state``.

    Each step: state += 0x9E3779B97F4A7C15; z mixes through the standard
    two multiply-xorshift rounds; u = z / 2**64 with u = 2**-64 when z == 0.
    """
    out = np.empty(n, dtype=np.float64)
    state &= _U64_MASK
    for i in range(n):
        state = (state + 0x9E3779B97F4A7C15) & _U64_MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64_MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64_MASK
        z = z ^ (z >> 31)
        out[i] = (z if z else 1) * 2.0 ** -64
    return out


def synthetic_embed(key: str, dim: int, seed_salt: int = 0) -> EmbeddingVector:
    """Deterministic pseudo-random unit vector for a text key.

    The stream seed is FNV-1a64(key) XOR seed_salt; uniform pairs are
    turned into Gaussians via Box-Muller and the result is L2-normalized.
    Independent of platform word size or numpy RNG state.
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    state = fnv1a64(key.encode("utf-8")) ^ (seed_salt & _U64_MASK)
    pairs = (dim + 1) // 2
    u = splitmix64_uniforms(state, 2 * pairs)
    u1, u2 = u[0::2], u[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    gauss = np.empty(2 * pairs, dtype=np.float64)
    gauss[0::2] = radius * np.cos(2.0 * math.pi * u2)
    gauss[1::2] = radius * np.sin(2.0 * math.pi * u2)
    return normalize(gauss[:dim])


def aligned_synthetic_image(
    class_name: str,
    image_id: str,
    epsilon: float,
    template: PromptTemplate = DEFAULT_TEMPLATE,
    dim: int = 512,
    salt: int = 0,
) -> EmbeddingVector:
    """Blend of a class-prompt direction and an image-keyed noise direction.

    normalize((1 - eps) * embed(prompt(class)) + eps * embed(image_id + "#noise")).
    eps = 0 returns the prompt vector itself, eps = 1 the pure noise
    vector.  If the blend cancels, the noise component is deterministically
    re-salted until it does not.
    """
    if not (0.0 <= epsilon <= 1.0):
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    anchor = synthetic_embed(render_prompt(template, class_name), dim, salt)
    if epsilon == 0.0:
        return anchor
    noise_key = image_id + "#noise"
    if epsilon == 1.0:
        return synthetic_embed(noise_key, dim, salt)
    base = anchor.values.astype(np.float64)
    for attempt in range(8):
        noise = synthetic_embed(noise_key, dim, (salt + attempt) & _U64_MASK)
        blend = (1.0 - epsilon) * base + epsilon * noise.values.astype(np.float64)
        try:
            return normalize(blend)
        except ZeroVectorError:
            logger.warning(
                "blend cancelled for image %r (attempt %d); re-salting noise",
                image_id,
                attempt,
            )
    raise ZeroVectorError(f"blend cancelled persistently for image {image_id!r}")


class SyntheticBackend(EmbeddingBackend):
    """Deterministic backend over a synthetic, separable geometry.

    Text prompts map to independent pseudo-random unit vectors; an image
    is epsilon-blended with its class prompt via aligned_synthetic_image,
    so small epsilon means strong image/prompt alignment.

    A fixed fraction of images (chosen by a hash of the image id, so the
    choice is reproducible from the id alone) are rendered as boundary
    cases whose alignment is almost fully attenuated.  They model the
    hard samples of a real benchmark that sit near another class; without
    them every detector separates the synthetic world perfectly and
    comparisons are vacuous.  At epsilon = 1 boundary and regular images
    alike degenerate to pure noise.
    """

    def __init__(
        self,
        image_classes: Mapping[str, str],
        dim: int = 512,
        salt: int = 0,
        epsilon: float = 0.1,
        template: PromptTemplate = DEFAULT_TEMPLATE,
        boundary_fraction: float = 0.1,
        boundary_retention: float = 0.02,
    ):
        if not (0.0 <= boundary_fraction < 1.0):
            raise ValueError("boundary_fraction must lie in [0, 1)")
        if not (0.0 < boundary_retention <= 1.0):
            raise ValueError("boundary_retention must lie in (0, 1]")
        self._classes = dict(image_classes)
        self.dim = int(dim)
        self.salt = int(salt) & _U64_MASK
        self.epsilon = float(epsilon)
        self.template = template
        self.boundary_fraction = float(boundary_fraction)
        self.boundary_retention = float(boundary_retention)
        self._text_cache: dict[str, EmbeddingVector] = {}

    def is_boundary_case(self, image_id: str) -> bool:
        seed = fnv1a64((image_id + "#hard").encode("utf-8")) ^ self.salt
        return float(splitmix64_uniforms(seed, 1)[0]) < self.boundary_fraction

    def image_epsilon(self, image_id: str) -> float:
        if self.is_boundary_case(image_id):
            return 1.0 - (1.0 - self.epsilon) * self.boundary_retention
        return self.epsilon

    def embed_image(self, image_id: str) -> EmbeddingVector:
        try:
            class_name = self._classes[image_id]
        except KeyError:
            raise MissingImageError(image_id) from None
        return aligned_synthetic_image(
            class_name,
            image_id,
            self.image_epsilon(image_id),
            self.template,
            self.dim,
            self.salt,
        )

    def embed_text(self, prompt: str) -> EmbeddingVector:
        cached = self._text_cache.get(prompt)
        if cached is None:
            cached = synthetic_embed(prompt, self.dim, self.salt)
            self._text_cache[prompt] = cached
        return cached

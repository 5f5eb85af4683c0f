"""Model adapters: the two contracts an export run plugs into.

An encoder adapter embeds image files and text strings into one shared
space; a decoder adapter runs stepwise caption generation over an image
and reports, per position, candidate words with log-probabilities.

Word semantics stop here: adapters must hand over whole surface words.
``merge_wordpieces`` implements the documented policy for subword
vocabularies: pieces are detokenized by the model's own convention,
continuation pieces and non-word tokens are dropped, duplicates keep
their best logprob.  The engine downstream never tokenizes.

The hash-based stub adapters are deterministic stand-ins used by the
test suite and for dry runs; adapters over real pretrained models live
in ``zosd_exporter.hf``.
"""
from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

# Continuation markers of the common subword schemes. A piece carrying
# one of these can never stand alone as a word.
_CONTINUATION_PREFIXES = ("##",)
_WORD_START_MARKERS = ("▁", "Ġ")  # sentencepiece "▁", byte-BPE "Ġ"


class ImageTextEncoder:
    """Frozen encoder pair mapping images and texts into one space."""

    identifier: str = "encoder"
    dim: int = 0

    def encode_image(self, path: Path) -> np.ndarray:
        raise NotImplementedError

    def encode_text(self, text: str) -> np.ndarray:
        raise NotImplementedError


class CaptioningDecoder:
    """Stepwise caption generator exposing per-position vocabulary candidates.

    ``decode_topk`` returns, for each generation position up to
    ``max_length``, a list of (word, logprob) pairs of whole words; at
    most ``k`` per position after merging.
    """

    identifier: str = "decoder"

    def decode_topk(self, path: Path, k: int, max_length: int) -> list[list[tuple[str, float]]]:
        raise NotImplementedError


def merge_wordpieces(pieces: list[tuple[str, float]]) -> list[tuple[str, float]]:
    """Subword pieces -> standalone words, best logprob per word.

    Continuation pieces (``##ing``) and tokens that contain no letter are
    dropped; word-start markers are stripped.  This is a documented
    approximation: a piece that only ever occurs mid-word never becomes
    a candidate label.
    """
    best: dict[str, float] = {}
    order: list[str] = []
    for token, logprob in pieces:
        word = token.strip()
        if word.startswith(_CONTINUATION_PREFIXES):
            continue
        for marker in _WORD_START_MARKERS:
            if word.startswith(marker):
                word = word[len(marker):]
        if not word or not any(ch.isalpha() for ch in word):
            continue
        if word not in best:
            best[word] = logprob
            order.append(word)
        elif logprob > best[word]:
            best[word] = logprob
    return [(word, best[word]) for word in order]


def _seeded_unit_vector(seed_material: bytes, dim: int) -> np.ndarray:
    digest = hashlib.sha256(seed_material).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    vec = rng.standard_normal(dim)
    return (vec / np.linalg.norm(vec)).astype(np.float32)


class HashEncoder(ImageTextEncoder):
    """Deterministic stub encoder: vectors derived from content hashes.

    Images hash by file bytes (two ids pointing at identical content get
    identical vectors, as a frozen model in eval mode would), texts by
    their UTF-8 form.
    """

    def __init__(self, dim: int = 64):
        self.dim = int(dim)
        self.identifier = f"hash-encoder-d{self.dim}"

    def encode_image(self, path: Path) -> np.ndarray:
        payload = Path(path).read_bytes()  # unreadable file fails fast here
        return _seeded_unit_vector(b"image:" + payload, self.dim)

    def encode_text(self, text: str) -> np.ndarray:
        return _seeded_unit_vector(b"text:" + text.encode("utf-8"), self.dim)


class HashDecoder(CaptioningDecoder):
    """Deterministic stub decoder emitting a wordpiece-style vocabulary.

    Each position ranks a slice of the vocabulary by a content-and-
    position keyed hash; the raw candidates include continuation pieces
    and punctuation, which ``merge_wordpieces`` then strips, mirroring
    how a real adapter post-processes model logits.
    """

    VOCABULARY = (
        "boat", "water", "##ing", "sky", "dog", "cat", "the", "a", ".",
        "sail", "##s", "harbor", "bird", "tree", "cloud", "street", ",",
        "person", "grass", "##ed", "house", "field", "river", "mountain",
    )

    def __init__(self, identifier: str = "hash-decoder-v1"):
        self.identifier = identifier

    def decode_topk(self, path: Path, k: int, max_length: int) -> list[list[tuple[str, float]]]:
        payload = Path(path).read_bytes()
        positions = []
        for position in range(max_length):
            digest = hashlib.sha256(payload + position.to_bytes(4, "little")).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
            scores = rng.uniform(-6.0, -0.01, size=len(self.VOCABULARY))
            ranked = sorted(
                zip(self.VOCABULARY, scores.tolist()),
                key=lambda e: (-e[1], e[0].lower(), e[0]),
            )
            merged = merge_wordpieces(ranked)
            positions.append(merged[:k])
        return positions

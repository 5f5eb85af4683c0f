"""Candidate-label extraction from per-position decoder vocabulary logits.

A decoder run is persisted as, for each generation position, the top
``stored_k`` (word, logprob) pairs.  The candidate set for an image is
the union of the top ``k`` words of every position, deduplicated
case-insensitively, optionally filtered against a stop list and against
the seen label names.  Order is deterministic: first appearance while
scanning positions left to right, ranks high to low.

Also provides the teacher-forcing cross-entropy of a fixed forward pass
as a standalone, verifiable function (no gradients, no training loop).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Label, LabelKind, ScoringConfig, generated_label
from .errors import (
    IndexOutOfRangeError,
    KTooLargeError,
    NonFiniteError,
    ShapeMismatchError,
)
from .stopwords import ENGLISH_STOPWORDS


@dataclass(frozen=True)
class PositionTopK:
    """Top-ranked (word, logprob) pairs of one generation position.

    Entries must be sorted by logprob descending, ties broken by word
    ascending (byte order of the lowercase form, then the raw form),
    with no duplicate words.
    """

    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        words = [w for w, _ in self.entries]
        if len(set(words)) != len(words):
            raise ValueError("duplicate word within one position")
        for (w1, lp1), (w2, lp2) in zip(self.entries, self.entries[1:]):
            if lp1 < lp2 or (lp1 == lp2 and (w1.lower(), w1) >= (w2.lower(), w2)):
                raise ValueError(
                    "position entries must be sorted by logprob desc, ties by word asc"
                )


@dataclass(frozen=True)
class DecoderOutput:
    """Per-image matrix of per-position top-k (word, logprob) pairs."""

    image_id: str
    positions: tuple[PositionTopK, ...]
    stored_k: int

    def __post_init__(self):
        if self.stored_k < 1:
            raise ValueError("stored_k must be >= 1")
        if len(self.positions) < 1:
            raise ValueError("decoder output needs at least one position")
        for pos in self.positions:
            if len(pos.entries) > self.stored_k:
                raise ValueError("a position holds more than stored_k entries")

    @property
    def length(self) -> int:
        return len(self.positions)


def position_topk(pairs) -> PositionTopK:
    """Build a PositionTopK from unordered pairs, applying the canonical sort."""
    ordered = sorted(pairs, key=lambda e: (-e[1], e[0].lower(), e[0]))
    return PositionTopK(tuple((str(w), float(lp)) for w, lp in ordered))


@dataclass(frozen=True)
class StopList:
    """A set of lowercase, trimmed words to exclude from candidates."""

    words: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        cleaned = frozenset(w.strip().lower() for w in self.words if w.strip())
        object.__setattr__(self, "words", cleaned)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.words


DEFAULT_STOPLIST = StopList(ENGLISH_STOPWORDS)
EMPTY_STOPLIST = StopList(frozenset())


@dataclass(frozen=True)
class CandidateSet:
    """Generated labels in deterministic extraction order."""

    labels: tuple[Label, ...] = ()

    def __post_init__(self):
        lowered = [label.name.lower() for label in self.labels]
        if len(set(lowered)) != len(lowered):
            raise ValueError("candidate labels must be unique case-insensitively")
        if any(label.kind is not LabelKind.GENERATED for label in self.labels):
            raise ValueError("candidate labels must have kind GENERATED")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(label.name for label in self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __bool__(self) -> bool:
        return bool(self.labels)


def extract_candidates(
    d: DecoderOutput,
    config: ScoringConfig,
    stoplist: StopList = DEFAULT_STOPLIST,
    seen: list[Label] | tuple[Label, ...] = (),
) -> CandidateSet:
    """Union the top-k words of every position into the candidate set.

    Scan order is positions left to right, ranks high to low.  Dedup is
    case-insensitive and keeps the first occurrence's surface form.  An
    empty result is legal, not an error.
    """
    if config.k > d.stored_k:
        raise KTooLargeError(
            f"requested k={config.k} exceeds stored_k={d.stored_k} for image {d.image_id!r}"
        )
    for label in seen:
        if label.kind is not LabelKind.SEEN:
            raise ValueError(f"seen label {label.name!r} has kind {label.kind}")
    seen_lower = {label.name.lower() for label in seen}

    picked: list[str] = []
    taken: set[str] = set()
    for pos in d.positions:
        for word, _ in pos.entries[: config.k]:
            lower = word.lower()
            if lower in taken:
                continue
            taken.add(lower)
            if config.filter_stopwords and lower in stoplist.words:
                continue
            if config.dedup_against_seen and lower in seen_lower:
                continue
            picked.append(word)
    return CandidateSet(tuple(generated_label(w) for w in picked))


def best_logprobs(d: DecoderOutput, k: int) -> dict[str, float]:
    """Best (maximum) logprob of each word across the scanned top-k slots.

    Keys are lowercase forms; used for candidate reporting.
    """
    if k > d.stored_k:
        raise KTooLargeError(f"requested k={k} exceeds stored_k={d.stored_k}")
    best: dict[str, float] = {}
    for pos in d.positions:
        for word, lp in pos.entries[:k]:
            lower = word.lower()
            if lower not in best or lp > best[lower]:
                best[lower] = lp
    return best


def teacher_forcing_loss(logits, targets) -> float:
    """Cross-entropy of a fixed decoder forward pass under teacher forcing.

    ``logits`` is a T x V matrix, ``targets`` a length-T sequence of
    vocabulary indices; returns -sum_t log softmax(logits_t)[targets_t],
    computed with max-subtraction stability in float64.
    """
    mat = np.asarray(logits, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] == 0 or mat.shape[1] == 0:
        raise ShapeMismatchError("logits must be a non-empty T x V matrix")
    if not np.all(np.isfinite(mat)):
        raise NonFiniteError("teacher_forcing_loss: logits contain NaN or Inf")
    idx = np.asarray(targets)
    if idx.ndim != 1 or idx.shape[0] != mat.shape[0]:
        raise ShapeMismatchError(
            f"targets length {idx.shape} does not match T={mat.shape[0]}"
        )
    if not np.issubdtype(idx.dtype, np.integer):
        raise IndexOutOfRangeError(f"targets must be integer indices, got dtype {idx.dtype}")
    vocab = mat.shape[1]
    if np.any(idx < 0) or np.any(idx >= vocab):
        raise IndexOutOfRangeError(f"target index outside [0, {vocab})")

    rows = mat - mat.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(rows).sum(axis=1))
    picked = rows[np.arange(rows.shape[0]), idx.astype(np.intp)]
    return float((log_z - picked).sum())

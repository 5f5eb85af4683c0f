"""Domain types and exact vector/probability math shared by the engine.

Conventions that every caller can rely on:

* vectors are stored in float32 and are unit-norm (within 1e-4);
* all accumulation happens in float64, because dot products over
  dim ~ 512 lose precision in float32;
* cosine similarities are clamped to [-1, 1] so downstream exp() never
  sees an out-of-domain value;
* all functions here are pure and safe to call concurrently.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigurationError,
    DimMismatchError,
    EmptyInputError,
    NonFiniteError,
    NormViolationError,
    ZeroVectorError,
)

# Unit-norm tolerance for vectors at rest (float32 storage).
NORM_ATOL = 1e-4

# Placeholder marker a prompt template must contain exactly once.
PLACEHOLDER = "{}"

# Default prompt frame used to embed a label name in text space.
# The trailing period is deliberate and must match the exporter side.
DEFAULT_TEMPLATE_TEXT = "This is a photo of a {}."


class LabelKind(enum.Enum):
    SEEN = "seen"
    GENERATED = "generated"


@dataclass(frozen=True)
class Label:
    """A class name together with its provenance (given vs. generated)."""

    name: str
    kind: LabelKind

    def __post_init__(self):
        if not self.name:
            raise ValueError("label name must be non-empty")


def seen_label(name: str) -> Label:
    return Label(name, LabelKind.SEEN)


def generated_label(name: str) -> Label:
    return Label(name, LabelKind.GENERATED)


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    """A unit-norm dense vector (an encoded image or an encoded prompt).

    Values are held as read-only float32; construction rejects non-finite
    input and input whose L2 norm is farther than ``NORM_ATOL`` from 1.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float32)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("embedding must be a non-empty 1-D vector")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("embedding contains NaN or Inf")
        norm = float(np.linalg.norm(arr.astype(np.float64)))
        if abs(norm - 1.0) > NORM_ATOL:
            raise NormViolationError(f"embedding norm {norm!r} is not unit within {NORM_ATOL}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class PromptTemplate:
    """A sentence frame with exactly one ``{}`` placeholder."""

    template: str = DEFAULT_TEMPLATE_TEXT

    def __post_init__(self):
        if self.template.count(PLACEHOLDER) != 1:
            raise ValueError(
                f"template must contain exactly one {PLACEHOLDER!r} marker: {self.template!r}"
            )

    def render(self, label: Label | str) -> str:
        name = label.name if isinstance(label, Label) else label
        if not name:
            raise ValueError("label name must be non-empty")
        # Plain substitution: no trimming, no case change.
        return self.template.replace(PLACEHOLDER, name, 1)


DEFAULT_TEMPLATE = PromptTemplate()


def render_prompt(template: PromptTemplate, label: Label | str) -> str:
    """Render a label name into a prompt template (deterministic substitution)."""
    return template.render(label)


@dataclass(frozen=True)
class ScoringConfig:
    """Knobs of the inference pipeline.

    temperature is the logit multiplier applied to cosine similarities
    before the softmax.  The detection score is a probability mass, so
    results are *not* invariant to it; it is echoed into every report.
    """

    temperature: float = 100.0
    k: int = 35
    filter_stopwords: bool = True
    dedup_against_seen: bool = True

    def __post_init__(self):
        if not (self.temperature > 0):
            raise ConfigurationError(f"temperature must be > 0, got {self.temperature!r}")
        if self.k < 1:
            raise ConfigurationError(f"k must be >= 1, got {self.k!r}")


@dataclass(frozen=True)
class SoftmaxDistribution:
    """An ordered categorical distribution over labels."""

    entries: tuple[tuple[Label, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        probs = [p for _, p in self.entries]
        if any(p < 0.0 or p > 1.0 for p in probs):
            raise ValueError("probabilities must lie in [0, 1]")
        if probs and abs(sum(probs) - 1.0) > 1e-6:
            raise ValueError(f"probabilities sum to {sum(probs)!r}, not 1")

    def mass(self, kind: LabelKind) -> float:
        return sum(p for label, p in self.entries if label.kind is kind)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def normalize(v) -> EmbeddingVector:
    """Project a raw real vector onto the unit sphere.

    Raises ZeroVectorError when the norm underflows and NonFiniteError
    for NaN/Inf input.  Direction is preserved exactly; math runs in
    float64, storage is float32.
    """
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise EmptyInputError("normalize expects a non-empty 1-D vector")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("normalize: input contains NaN or Inf")
    norm = float(np.linalg.norm(arr))
    if norm == 0.0 or not np.isfinite(1.0 / norm):
        raise ZeroVectorError("normalize: zero (or underflowing) vector")
    return EmbeddingVector((arr / norm).astype(np.float32))


def unit_dot(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Float64 dot product of two unit vectors, without clamping."""
    if a.dim != b.dim:
        raise DimMismatchError(f"dim mismatch: {a.dim} vs {b.dim}")
    return float(np.dot(a.values.astype(np.float64), b.values.astype(np.float64)))


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity of two unit vectors: their dot, clamped to [-1, 1]."""
    return min(1.0, max(-1.0, unit_dot(a, b)))


def softmax(logits, temperature: float = 1.0) -> np.ndarray:
    """Temperature-scaled softmax with max-subtraction for stability.

    p_i = exp(t*l_i - m) / sum_j exp(t*l_j - m)  with  m = max_j t*l_j.
    """
    if not (temperature > 0):
        raise ConfigurationError(f"temperature must be > 0, got {temperature!r}")
    arr = np.asarray(logits, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise EmptyInputError("softmax expects a non-empty 1-D sequence of logits")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("softmax: logits contain NaN or Inf")
    scaled = temperature * arr
    scaled -= scaled.max()
    exps = np.exp(scaled)
    return exps / exps.sum()

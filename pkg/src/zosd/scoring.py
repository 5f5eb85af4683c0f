"""Open-set inference: label spaces, P(y|x), the detection score, MSP.

For one image the pipeline is: render every label (seen first, then
generated) through the prompt template, query the backend for the text
embeddings, take cosine similarities against the image embedding,
softmax them at the configured temperature, and report

* ``score``      -- 1 minus the probability mass on seen labels, i.e.
                    the accumulated mass on generated candidates
                    (0 exactly when there are no candidates);
* ``msp_score``  -- 1 minus the maximum of a *separate* softmax over the
                    seen labels only.  This is the zero-shot baseline,
                    which has no candidate generator; both scores are
                    oriented so that higher means "more likely unseen".

Scoring different images is embarrassingly parallel; everything here is
pure and results do not depend on the degree of parallelism.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .candidates import (
    DEFAULT_STOPLIST,
    CandidateSet,
    StopList,
    extract_candidates,
)
from .core import (
    DEFAULT_TEMPLATE,
    Label,
    LabelKind,
    PromptTemplate,
    ScoringConfig,
    SoftmaxDistribution,
    EmbeddingVector,
    render_prompt,
    softmax,
    unit_dot,
)
from .errors import (
    ConfigurationError,
    EmptySeenError,
    MissingTextEmbeddingError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabelSpace:
    """The seen labels together with the generated candidates for one image."""

    seen: tuple[Label, ...]
    generated: CandidateSet = field(default_factory=CandidateSet)

    def __post_init__(self):
        object.__setattr__(self, "seen", tuple(self.seen))
        if not self.seen:
            raise EmptySeenError("label space needs at least one seen label")
        for label in self.seen:
            if label.kind is not LabelKind.SEEN:
                raise ValueError(f"label {label.name!r} in seen list has kind {label.kind}")
        names = [l.name.lower() for l in self.seen] + [
            l.name.lower() for l in self.generated
        ]
        if len(set(names)) != len(names):
            raise ConfigurationError(
                "seen and generated label names collide case-insensitively; "
                "enable dedup_against_seen or rename the seen labels"
            )

    def labels(self) -> tuple[Label, ...]:
        return self.seen + tuple(self.generated)


@dataclass(frozen=True)
class ScoreResult:
    """Outcome of scoring one image against a label space."""

    image_id: str
    distribution: SoftmaxDistribution
    score: float
    msp_score: float
    predicted_seen: Label
    config_echo: ScoringConfig
    diagnostics: tuple[str, ...] = ()

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score {self.score!r} outside [0, 1]")
        if not (0.0 <= self.msp_score <= 1.0):
            raise ValueError(f"msp_score {self.msp_score!r} outside [0, 1]")
        seen_mass = self.distribution.mass(LabelKind.SEEN)
        if abs(self.score - (1.0 - seen_mass)) > 1e-6:
            raise ValueError("score deviates from 1 - seen probability mass")


def open_set_score(
    image: EmbeddingVector,
    space: LabelSpace,
    backend,
    config: ScoringConfig,
    template: PromptTemplate = DEFAULT_TEMPLATE,
    *,
    image_id: str = "",
    skip_missing_candidates: bool = False,
) -> ScoreResult:
    """Score one image embedding against a label space.

    A missing text embedding is a hard error; with
    ``skip_missing_candidates`` a missing *generated* label is dropped
    with a diagnostic instead (silent drops would bias the score).
    """
    diagnostics: list[str] = []
    kept: list[Label] = []
    logits: list[float] = []
    clamped = 0
    for label in space.labels():
        prompt = render_prompt(template, label)
        try:
            text_vec = backend.embed_text(prompt)
        except MissingTextEmbeddingError as exc:
            if skip_missing_candidates and label.kind is LabelKind.GENERATED:
                diagnostics.append(f"dropped candidate {label.name!r}: no text embedding")
                logger.warning("image %s: dropping candidate %r (no embedding)", image_id, label.name)
                continue
            raise MissingTextEmbeddingError(label.name, prompt) from exc
        raw = unit_dot(image, text_vec)
        if raw > 1.0 or raw < -1.0:
            clamped += 1
        logits.append(min(1.0, max(-1.0, raw)))
        kept.append(label)
    if clamped:
        diagnostics.append(f"clamped {clamped} cosine value(s) to [-1, 1]")

    n_seen = len(space.seen)
    probs = softmax(np.asarray(logits), config.temperature)
    distribution = SoftmaxDistribution(
        tuple((label, float(p)) for label, p in zip(kept, probs))
    )

    n_generated = len(kept) - n_seen
    if n_generated == 0:
        score = 0.0
        diagnostics.append("candidate set is empty; score fixed at 0")
        logger.warning("image %s: empty candidate set, score is 0", image_id)
    else:
        score = min(1.0, max(0.0, 1.0 - float(probs[:n_seen].sum())))

    seen_probs = softmax(np.asarray(logits[:n_seen]), config.temperature)
    best = int(np.argmax(seen_probs))  # first maximum: ties break by seen order
    msp_score = min(1.0, max(0.0, 1.0 - float(seen_probs[best])))

    return ScoreResult(
        image_id=image_id,
        distribution=distribution,
        score=score,
        msp_score=msp_score,
        predicted_seen=space.seen[best],
        config_echo=config,
        diagnostics=tuple(diagnostics),
    )


def run_inference(
    image_id: str,
    seen: tuple[Label, ...] | list[Label],
    backend,
    logit_store,
    config: ScoringConfig,
    stoplist: StopList = DEFAULT_STOPLIST,
    template: PromptTemplate = DEFAULT_TEMPLATE,
    *,
    skip_missing_candidates: bool = False,
) -> ScoreResult:
    """Full single-image inference: extract candidates, then score.

    Exactly composes extract_candidates and open_set_score; there is no
    hidden state, so calling the two pieces separately gives the same
    result.
    """
    image = backend.embed_image(image_id)
    decoder_output = logit_store.get(image_id)
    generated = extract_candidates(decoder_output, config, stoplist, tuple(seen))
    space = LabelSpace(tuple(seen), generated)
    return open_set_score(
        image,
        space,
        backend,
        config,
        template,
        image_id=image_id,
        skip_missing_candidates=skip_missing_candidates,
    )


def top_contributors(result: ScoreResult, threshold: float = 0.1) -> list[tuple[Label, float]]:
    """Labels whose probability exceeds the threshold, highest first.

    Ties keep label order (seen before generated, extraction order
    within generated).
    """
    if not (0.0 <= threshold < 1.0):
        raise ValueError(f"threshold must lie in [0, 1), got {threshold}")
    picked = [(label, p) for label, p in result.distribution if p > threshold]
    picked.sort(key=lambda entry: -entry[1])  # stable: ties keep label order
    return picked

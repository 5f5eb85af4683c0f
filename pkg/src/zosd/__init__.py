"""Zero-shot open-set detection engine.

Scores test images against the union of given (seen) class names and
candidate labels extracted from a caption decoder's per-position
vocabulary logits, and benchmarks detectors with AUROC over splits.
"""

from .core import (
    DEFAULT_TEMPLATE,
    DEFAULT_TEMPLATE_TEXT,
    EmbeddingVector,
    Label,
    LabelKind,
    PromptTemplate,
    ScoringConfig,
    SoftmaxDistribution,
    cosine,
    generated_label,
    normalize,
    render_prompt,
    seen_label,
    softmax,
)
from .candidates import (
    DEFAULT_STOPLIST,
    EMPTY_STOPLIST,
    CandidateSet,
    DecoderOutput,
    PositionTopK,
    StopList,
    best_logprobs,
    extract_candidates,
    position_topk,
    teacher_forcing_loss,
)
from .scoring import (
    LabelSpace,
    ScoreResult,
    open_set_score,
    run_inference,
    top_contributors,
)
from .eval import (
    EvalReport,
    ImageOutcome,
    SplitRow,
    SplitSpec,
    aggregate,
    aggregate_reports,
    auroc,
    evaluate,
    histogram,
    openness,
    read_split,
    write_split,
)
from .store import (
    CandidateLogitsStore,
    EmbeddingBackend,
    MappingBackend,
    SyntheticBackend,
    aligned_synthetic_image,
    fnv1a64,
    read_logits,
    read_store,
    synthetic_embed,
    write_logits,
    write_store,
)
from . import bench, errors

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"

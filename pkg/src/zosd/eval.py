"""Benchmark harness: splits, openness, AUROC, aggregation, histograms.

AUROC is computed by the rank formulation of the Mann-Whitney statistic
with average ranks for ties, oriented so that the unseen class is the
positive class: it equals the probability that a random unseen image
outscores a random seen image, counting ties half.  All intermediate
quantities are half-integers, so the rank route agrees *exactly* with
the naive pairwise count.

Split files are JSON:
``{"name": str, "seen": [str], "unseen": [str], "images": [{"id": str, "class": str}]}``
with seen/unseen disjoint and every image class covered by one of them.
"""
from __future__ import annotations

import os
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .candidates import DEFAULT_STOPLIST, StopList
from .core import DEFAULT_TEMPLATE, PromptTemplate, ScoringConfig, seen_label
from .errors import (
    ConfigurationError,
    EmptyListError,
    InvalidCountsError,
    OneClassOnlyError,
    OutOfRangeError,
    StoreFormatError,
)
from .scoring import ScoreResult, run_inference


@dataclass(frozen=True)
class SplitSpec:
    """One benchmark split: class partition plus the test image pool."""

    name: str
    seen_classes: tuple[str, ...]
    unseen_classes: tuple[str, ...]
    images: tuple[tuple[str, str], ...] = ()  # (image_id, class_name)

    def __post_init__(self):
        if not self.seen_classes or not self.unseen_classes:
            raise ValueError(f"split {self.name!r}: seen and unseen must be non-empty")
        overlap = set(self.seen_classes) & set(self.unseen_classes)
        if overlap:
            raise ValueError(f"split {self.name!r}: classes in both sides: {sorted(overlap)}")
        known = set(self.seen_classes) | set(self.unseen_classes)
        for image_id, class_name in self.images:
            if class_name not in known:
                raise ValueError(
                    f"split {self.name!r}: image {image_id!r} has unknown class {class_name!r}"
                )

    def is_unseen_class(self, class_name: str) -> bool:
        return class_name in self.unseen_classes

    @property
    def openness_pct(self) -> float:
        n_seen = len(self.seen_classes)
        return openness(n_seen, n_seen, n_seen + len(self.unseen_classes))


def read_split(path) -> SplitSpec:
    try:
        record = json.loads(Path(path).read_text(encoding="utf-8"))
        spec = SplitSpec(
            name=str(record["name"]),
            seen_classes=tuple(str(c) for c in record["seen"]),
            unseen_classes=tuple(str(c) for c in record["unseen"]),
            images=tuple((str(i["id"]), str(i["class"])) for i in record.get("images", ())),
        )
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise StoreFormatError(f"{path}: malformed split file ({exc})") from exc
    except ValueError as exc:
        raise StoreFormatError(f"{path}: {exc}") from exc
    return spec


def write_split(split: SplitSpec, path) -> None:
    record = {
        "name": split.name,
        "seen": list(split.seen_classes),
        "unseen": list(split.unseen_classes),
        "images": [{"id": i, "class": c} for i, c in split.images],
    }
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(record, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    os.replace(tmp, path)


@dataclass(frozen=True)
class ImageOutcome:
    """Ground truth and detection score of one evaluated image."""

    image_id: str
    score: float
    is_unseen: bool

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError(f"outcome for {self.image_id!r} has non-finite score")


def openness(n_train: int, n_target: int, n_test: int) -> float:
    """Task difficulty in percent: (1 - sqrt(2*n_train / (n_test + n_target))) * 100.

    n_train: seen classes; n_target: seen classes at test; n_test: total
    classes (seen + unseen) at test.
    """
    if n_train < 1 or n_target < 1 or n_test < n_target:
        raise InvalidCountsError(
            f"need n_test >= n_target >= 1 and n_train >= 1, "
            f"got ({n_train}, {n_target}, {n_test})"
        )
    return (1.0 - math.sqrt(2.0 * n_train / (n_test + n_target))) * 100.0


def auroc(outcomes: Sequence[ImageOutcome]) -> float:
    """Rank-based AUROC with unseen as the positive class, ties counted half."""
    scores = np.asarray([o.score for o in outcomes], dtype=np.float64)
    positive = np.asarray([o.is_unseen for o in outcomes], dtype=bool)
    n_pos = int(positive.sum())
    n_neg = int(len(outcomes) - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise OneClassOnlyError(
            f"AUROC needs both classes, got {n_pos} unseen / {n_neg} seen outcomes"
        )
    ranks = _average_ranks(scores)
    u_stat = float(ranks[positive].sum()) - n_pos * (n_pos + 1) / 2.0
    return u_stat / (n_pos * n_neg)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks, tied values sharing the average of their rank range."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def aggregate(per_split_values: Sequence[float]) -> tuple[float, float]:
    """Arithmetic mean and population standard deviation (divide by n)."""
    if len(per_split_values) == 0:
        raise EmptyListError("nothing to aggregate")
    arr = np.asarray(per_split_values, dtype=np.float64)
    mean = float(arr.mean())
    std = float(np.sqrt(((arr - mean) ** 2).mean()))
    return mean, std


def histogram(scores: Sequence[float], bins: int) -> list[int]:
    """Equal-width bin counts over [0, 1].

    Bins are half-open [lo, hi) except the last, which is closed so a
    score of exactly 1.0 is counted.  Counts sum to len(scores).
    """
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    interior_edges = np.arange(1, bins) / bins
    counts = [0] * bins
    for s in scores:
        if not (0.0 <= s <= 1.0):
            raise OutOfRangeError(f"score {s!r} outside [0, 1]")
        counts[int(np.searchsorted(interior_edges, s, side="right"))] += 1
    return counts


@dataclass(frozen=True)
class SplitRow:
    """Per-split evaluation results."""

    name: str
    auroc: float
    auroc_msp: float
    n_seen_images: int
    n_unseen_images: int
    histograms: tuple[tuple[str, tuple[int, ...]], ...] = ()

    def __post_init__(self):
        if not (0.0 <= self.auroc <= 1.0) or not (0.0 <= self.auroc_msp <= 1.0):
            raise ValueError(f"split {self.name!r}: AUROC outside [0, 1]")


@dataclass(frozen=True)
class EvalReport:
    """Aggregated benchmark results over one or more splits."""

    per_split: tuple[SplitRow, ...]
    mean_auroc: float
    std_auroc: float
    mean_auroc_msp: float
    std_auroc_msp: float
    openness_pct: float
    config_echo: ScoringConfig

    def __post_init__(self):
        if self.std_auroc < 0 or self.std_auroc_msp < 0:
            raise ValueError("standard deviation must be non-negative")
        if not (0.0 <= self.mean_auroc <= 1.0) or not (0.0 <= self.mean_auroc_msp <= 1.0):
            raise ValueError("mean AUROC outside [0, 1]")


def evaluate(
    split: SplitSpec,
    backend,
    logit_store,
    config: ScoringConfig,
    *,
    template: PromptTemplate = DEFAULT_TEMPLATE,
    stoplist: StopList = DEFAULT_STOPLIST,
    threads: int = 1,
    skip_missing_candidates: bool = False,
    bins: int = 20,
) -> EvalReport:
    """Score every image of a split and report AUROC for both scorers.

    Seen-class test images are ground-truth negatives, unseen-class
    images positives.  Any per-image failure aborts the whole run;
    partial results are never emitted.  Output is independent of
    ``threads`` because the per-image work is pure and reassembled in
    pool order.
    """
    if not split.images:
        raise ValueError(f"split {split.name!r} has no test images")
    seen = tuple(seen_label(name) for name in split.seen_classes)

    def score_one(record: tuple[str, str]) -> ScoreResult:
        image_id, _ = record
        return run_inference(
            image_id,
            seen,
            backend,
            logit_store,
            config,
            stoplist,
            template,
            skip_missing_candidates=skip_missing_candidates,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(score_one, split.images))
    else:
        results = [score_one(record) for record in split.images]

    outcomes = []
    msp_outcomes = []
    by_class: dict[str, list[float]] = {c: [] for c in split.seen_classes + split.unseen_classes}
    for (image_id, class_name), result in zip(split.images, results):
        is_unseen = split.is_unseen_class(class_name)
        outcomes.append(ImageOutcome(image_id, result.score, is_unseen))
        msp_outcomes.append(ImageOutcome(image_id, result.msp_score, is_unseen))
        by_class[class_name].append(result.score)

    row = SplitRow(
        name=split.name,
        auroc=auroc(outcomes),
        auroc_msp=auroc(msp_outcomes),
        n_seen_images=sum(1 for o in outcomes if not o.is_unseen),
        n_unseen_images=sum(1 for o in outcomes if o.is_unseen),
        histograms=tuple(
            (class_name, tuple(histogram(scores, bins)))
            for class_name, scores in by_class.items()
        ),
    )
    return EvalReport(
        per_split=(row,),
        mean_auroc=row.auroc,
        std_auroc=0.0,
        mean_auroc_msp=row.auroc_msp,
        std_auroc_msp=0.0,
        openness_pct=split.openness_pct,
        config_echo=config,
    )


def aggregate_reports(reports: Sequence[EvalReport]) -> EvalReport:
    """Merge per-split reports into one (mean and population std over splits)."""
    if not reports:
        raise EmptyListError("no reports to aggregate")
    first = reports[0]
    for report in reports[1:]:
        if report.config_echo != first.config_echo:
            raise ConfigurationError("cannot aggregate reports with different configs")
        if abs(report.openness_pct - first.openness_pct) > 1e-9:
            raise ConfigurationError("cannot aggregate reports with different openness")
    rows = tuple(row for report in reports for row in report.per_split)
    mean_s, std_s = aggregate([row.auroc for row in rows])
    mean_m, std_m = aggregate([row.auroc_msp for row in rows])
    return EvalReport(
        per_split=rows,
        mean_auroc=mean_s,
        std_auroc=std_s,
        mean_auroc_msp=mean_m,
        std_auroc_msp=std_m,
        openness_pct=first.openness_pct,
        config_echo=first.config_echo,
    )

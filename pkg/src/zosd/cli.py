"""Command-line orchestration.

Subcommands: ``score`` (one image, JSON to stdout), ``evaluate`` (splits
to report files), ``candidates`` (candidate extraction dump), and
``openness`` (difficulty metric).  Configuration precedence is flags >
config file > defaults, and the resolved configuration is echoed into
every output so runs are reproducible from their artifacts.

Exit codes are stable: 0 success, 1 configuration error, 2 missing or
malformed data, 3 internal invariant violation.  ``ZOSD_LOG`` selects
the log level; logs go to stderr, never stdout.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import bench
from .candidates import DEFAULT_STOPLIST, EMPTY_STOPLIST, best_logprobs, extract_candidates
from .core import DEFAULT_TEMPLATE_TEXT, PromptTemplate, ScoringConfig, seen_label
from .errors import (
    ConfigurationError,
    EngineError,
    MissingDataError,
    StoreFormatError,
)
from .eval import EvalReport, aggregate_reports, evaluate, openness, read_split
from .scoring import run_inference, top_contributors
from .store import CandidateLogitsStore, MappingBackend

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MISSING_DATA = 2
EXIT_INTERNAL = 3

CONTRIBUTOR_THRESHOLD = 0.1
HISTOGRAM_BINS = 20


@dataclass
class RunConfig:
    """Fully resolved run configuration (flags > config file > defaults)."""

    embeddings_images: str | None = None
    embeddings_text: str | None = None
    logits: str | None = None
    split: list[str] | None = None
    seen: str | None = None
    k: int = 35
    temperature: float = 100.0
    template: str = DEFAULT_TEMPLATE_TEXT
    stopwords: bool = True
    dedup_seen: bool = True
    synthetic: bool = False
    dim: int = 512
    seed: int = 42
    epsilon: float = 0.1
    threads: int = 1
    out: str = "zosd-out"
    skip_missing_candidates: bool = False
    verbose: bool = False

    def validate(self, needs_backend: bool = True) -> None:
        file_paths = [self.embeddings_images, self.embeddings_text]
        if self.synthetic:
            if any(p is not None for p in file_paths) or self.logits is not None:
                raise ConfigurationError(
                    "--synthetic conflicts with --embeddings-images/--embeddings-text/--logits"
                )
        elif needs_backend:
            if any(p is None for p in file_paths):
                raise ConfigurationError(
                    "select exactly one backend: either --synthetic or both "
                    "--embeddings-images and --embeddings-text"
                )
        if self.k < 1:
            raise ConfigurationError(f"--k must be >= 1, got {self.k}")
        if not (self.temperature > 0):
            raise ConfigurationError(f"--temperature must be > 0, got {self.temperature}")
        if self.threads < 1:
            raise ConfigurationError(f"--threads must be >= 1, got {self.threads}")
        if self.dim < 2:
            raise ConfigurationError(f"--dim must be >= 2, got {self.dim}")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ConfigurationError(f"--epsilon must lie in [0, 1], got {self.epsilon}")
        if not (0 <= self.seed < 2**64):
            raise ConfigurationError(f"--seed must be an unsigned 64-bit value, got {self.seed}")

    def scoring_config(self) -> ScoringConfig:
        return ScoringConfig(
            temperature=self.temperature,
            k=self.k,
            filter_stopwords=self.stopwords,
            dedup_against_seen=self.dedup_seen,
        )

    def prompt_template(self) -> PromptTemplate:
        try:
            return PromptTemplate(self.template)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc

    def stoplist(self):
        return DEFAULT_STOPLIST if self.stopwords else EMPTY_STOPLIST

    def echo(self) -> dict:
        """Configuration block echoed into every report."""
        block = {
            "schema_version": SCHEMA_VERSION,
            "temperature": self.temperature,
            "k": self.k,
            "template": self.template,
            "filter_stopwords": self.stopwords,
            "dedup_against_seen": self.dedup_seen,
            "std_convention": "population",
            "auroc_positive_class": "unseen",
            "msp_orientation": "1 - max(seen-only softmax); higher means more likely unseen",
            "backend": "synthetic" if self.synthetic else "files",
        }
        if self.synthetic:
            block.update({"dim": self.dim, "seed": self.seed, "epsilon": self.epsilon})
        return block


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; our contract reserves 2 for missing
    # data, so surface parse failures as configuration errors instead.
    def error(self, message):
        raise ConfigurationError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file; flags override it")
    common.add_argument("--embeddings-images", metavar="PATH")
    common.add_argument("--embeddings-text", metavar="PATH")
    common.add_argument("--logits", metavar="PATH")
    common.add_argument("--split", metavar="PATH", nargs="+")
    common.add_argument("--seen", metavar="NAMES", help="comma-separated seen labels (overrides the split's)")
    common.add_argument("--k", type=int)
    common.add_argument("--temperature", type=float)
    common.add_argument("--template")
    common.add_argument("--stopwords", action=argparse.BooleanOptionalAction,
                        help="filter stop words from candidates (--no-stopwords to disable)")
    common.add_argument("--dedup-seen", action=argparse.BooleanOptionalAction,
                        help="drop candidates equal to seen labels (--no-dedup-seen to disable)")
    common.add_argument("--synthetic", action=argparse.BooleanOptionalAction)
    common.add_argument("--dim", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--threads", type=int)
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--skip-missing-candidates", action=argparse.BooleanOptionalAction)
    common.add_argument("--verbose", action=argparse.BooleanOptionalAction)

    parser = _Parser(prog="zosd", description="Zero-shot open-set detection engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", parents=[common], help="score one image", prog="zosd score")
    p_score.add_argument("image_id")

    sub.add_parser("evaluate", parents=[common], help="evaluate benchmark splits",
                   prog="zosd evaluate")

    p_cand = sub.add_parser("candidates", parents=[common],
                            help="dump extracted candidates for one image", prog="zosd candidates")
    p_cand.add_argument("image_id")

    p_open = sub.add_parser("openness", help="print the openness percentage",
                            prog="zosd openness")
    p_open.add_argument("n_train", type=int)
    p_open.add_argument("n_target", type=int)
    p_open.add_argument("n_test", type=int)
    return parser


def resolve_config(args: argparse.Namespace, needs_backend: bool = True) -> RunConfig:
    file_values: dict = {}
    if getattr(args, "config", None):
        try:
            file_values = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigurationError(f"config file not found: {args.config}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(file_values, dict):
            raise ConfigurationError("config file must hold a JSON object")

    config = RunConfig()
    for spec in fields(RunConfig):
        flag_value = getattr(args, spec.name, None)
        if flag_value is not None:
            setattr(config, spec.name, flag_value)
        elif spec.name in file_values:
            setattr(config, spec.name, file_values[spec.name])
    config.validate(needs_backend)
    return config


def _load_splits(config: RunConfig, require: bool = True):
    if not config.split:
        if require:
            raise ConfigurationError("--split is required for this command")
        return []
    return [read_split(path) for path in config.split]


def _seen_labels(config: RunConfig, splits):
    if config.seen:
        names = [name.strip() for name in config.seen.split(",") if name.strip()]
        if not names:
            raise ConfigurationError("--seen was given but holds no names")
        return tuple(seen_label(name) for name in names)
    if splits:
        return tuple(seen_label(name) for name in splits[0].seen_classes)
    raise ConfigurationError("no seen labels: pass --split or --seen")


def _build_backend_and_logits(config: RunConfig, splits):
    if config.synthetic:
        if not splits:
            raise ConfigurationError("--synthetic needs --split to define the image pool")
        backend, logit_store = bench.build_world(
            tuple(splits),
            dim=config.dim,
            salt=config.seed,
            epsilon=config.epsilon,
            template=config.prompt_template(),
            stored_k=max(config.k, 35),
        )
        return backend, logit_store
    backend = MappingBackend.from_files(config.embeddings_images, config.embeddings_text)
    logit_store = CandidateLogitsStore.from_file(config.logits)
    return backend, logit_store


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_score(image_id: str, config: RunConfig) -> int:
    splits = _load_splits(config, require=not (config.seen and not config.synthetic))
    seen = _seen_labels(config, splits)
    backend, logit_store = _build_backend_and_logits(config, splits)
    result = run_inference(
        image_id,
        seen,
        backend,
        logit_store,
        config.scoring_config(),
        config.stoplist(),
        config.prompt_template(),
        skip_missing_candidates=config.skip_missing_candidates,
    )
    payload = {
        "schema_version": SCHEMA_VERSION,
        "image_id": result.image_id,
        "score": result.score,
        "msp_score": result.msp_score,
        "predicted_seen": result.predicted_seen.name,
        "top_contributors": [
            {"label": label.name, "kind": label.kind.value, "probability": prob}
            for label, prob in top_contributors(result, CONTRIBUTOR_THRESHOLD)
        ],
        "diagnostics": list(result.diagnostics),
        "config": config.echo(),
    }
    if config.verbose:
        payload["distribution"] = [
            {"label": label.name, "kind": label.kind.value, "probability": prob}
            for label, prob in result.distribution
        ]
    print(json.dumps(payload, ensure_ascii=False))
    return EXIT_OK


def cmd_evaluate(config: RunConfig) -> int:
    splits = _load_splits(config)
    backend, logit_store = _build_backend_and_logits(config, splits)
    scoring_config = config.scoring_config()
    reports = [
        evaluate(
            split,
            backend,
            logit_store,
            scoring_config,
            template=config.prompt_template(),
            stoplist=config.stoplist(),
            threads=config.threads,
            skip_missing_candidates=config.skip_missing_candidates,
            bins=HISTOGRAM_BINS,
        )
        for split in splits
    ]
    combined = aggregate_reports(reports)

    # All computation is done; only now touch the output directory, so a
    # failed run never leaves partial reports behind.
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_json = _report_payload(combined, config)
    (out_dir / "report.json").write_text(
        json.dumps(report_json, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    (out_dir / "report.csv").write_text(_report_csv(combined), encoding="utf-8")
    (out_dir / "histograms.csv").write_text(_histograms_csv(combined, splits), encoding="utf-8")

    summary = {
        "schema_version": SCHEMA_VERSION,
        "splits": len(combined.per_split),
        "mean_auroc": combined.mean_auroc,
        "std_auroc": combined.std_auroc,
        "mean_auroc_msp": combined.mean_auroc_msp,
        "std_auroc_msp": combined.std_auroc_msp,
        "openness_pct": combined.openness_pct,
        "out": str(out_dir),
    }
    print(json.dumps(summary, ensure_ascii=False))
    return EXIT_OK


def _report_payload(report: EvalReport, config: RunConfig) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "config": config.echo(),
        "openness_pct": report.openness_pct,
        "aggregate": {
            "mean_auroc": report.mean_auroc,
            "std_auroc": report.std_auroc,
            "mean_auroc_msp": report.mean_auroc_msp,
            "std_auroc_msp": report.std_auroc_msp,
        },
        "per_split": [
            {
                "name": row.name,
                "auroc": row.auroc,
                "auroc_msp": row.auroc_msp,
                "n_seen_images": row.n_seen_images,
                "n_unseen_images": row.n_unseen_images,
            }
            for row in report.per_split
        ],
    }


def _report_csv(report: EvalReport) -> str:
    lines = ["split,auroc,auroc_msp,n_seen_images,n_unseen_images"]
    for row in report.per_split:
        lines.append(
            f"{row.name},{row.auroc!r},{row.auroc_msp!r},{row.n_seen_images},{row.n_unseen_images}"
        )
    lines.append(f"mean,{report.mean_auroc!r},{report.mean_auroc_msp!r},,")
    lines.append(f"std,{report.std_auroc!r},{report.std_auroc_msp!r},,")
    return "\n".join(lines) + "\n"


def _histograms_csv(report: EvalReport, splits) -> str:
    unseen_by_split = {split.name: set(split.unseen_classes) for split in splits}
    header = "split,class,is_unseen," + ",".join(
        f"bin_{i:02d}" for i in range(HISTOGRAM_BINS)
    )
    lines = [header]
    for row in report.per_split:
        unseen = unseen_by_split.get(row.name, set())
        for class_name, counts in row.histograms:
            flag = "true" if class_name in unseen else "false"
            lines.append(f"{row.name},{class_name},{flag}," + ",".join(map(str, counts)))
    return "\n".join(lines) + "\n"


def cmd_candidates(image_id: str, config: RunConfig) -> int:
    splits = _load_splits(config, require=config.synthetic)
    seen = ()
    if config.seen or splits:
        seen = _seen_labels(config, splits)
    if config.synthetic:
        _, logit_store = _build_backend_and_logits(config, splits)
    else:
        if config.logits is None:
            raise ConfigurationError("--logits is required without --synthetic")
        logit_store = CandidateLogitsStore.from_file(config.logits)
    decoder_output = logit_store.get(image_id)
    candidates = extract_candidates(
        decoder_output, config.scoring_config(), config.stoplist(), seen
    )
    ranked = best_logprobs(decoder_output, config.k)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "image_id": image_id,
        "k": config.k,
        "candidates": [
            {"word": label.name, "best_logprob": ranked[label.name.lower()]}
            for label in candidates
        ],
    }
    print(json.dumps(payload, ensure_ascii=False))
    return EXIT_OK


def cmd_openness(n_train: int, n_target: int, n_test: int) -> int:
    # Two-decimal truncation, not rounding: 13.397 prints as 13.39,
    # matching the convention of the published benchmark tables.
    value = openness(n_train, n_target, n_test)
    print(f"{int(value * 100) / 100:.2f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    level = os.environ.get("ZOSD_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "openness":
            return cmd_openness(args.n_train, args.n_target, args.n_test)
        config = resolve_config(args, needs_backend=args.command != "candidates")
        if args.command == "score":
            return cmd_score(args.image_id, config)
        if args.command == "evaluate":
            return cmd_evaluate(config)
        if args.command == "candidates":
            return cmd_candidates(args.image_id, config)
        raise ConfigurationError(f"unknown command {args.command!r}")
    except ConfigurationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MissingDataError, StoreFormatError, FileNotFoundError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MISSING_DATA
    except EngineError as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def console_main() -> None:
    sys.exit(main())

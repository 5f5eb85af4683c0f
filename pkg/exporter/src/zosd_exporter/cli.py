"""Export CLI: export-images / export-text / export-logits / validate-closure.

Every subcommand takes a manifest JSON (see ExportManifest) plus
``--stub`` to use the deterministic hash adapters instead of pretrained
checkpoints (useful for dry runs and format tests).
"""
from __future__ import annotations

import argparse
import logging
import sys

from .adapters import HashDecoder, HashEncoder
from .export import (
    ClosureError,
    export_decoder_logits,
    export_image_embeddings,
    export_text_embeddings,
    validate_closure,
)
from .formats import FormatError
from .manifest import ExportManifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zosd-export", description="Export model outputs into zosd file formats"
    )
    parser.add_argument("--manifest", required=True, help="manifest JSON path")
    parser.add_argument("--stub", action="store_true",
                        help="use deterministic hash adapters instead of checkpoints")
    parser.add_argument("--stub-dim", type=int, default=64)
    parser.add_argument(
        "command",
        choices=["export-images", "export-text", "export-logits", "validate-closure"],
    )
    return parser


def _encoder(manifest: ExportManifest, args):
    if args.stub:
        return HashEncoder(dim=args.stub_dim)
    from .hf import HFImageTextEncoder

    return HFImageTextEncoder(manifest.encoder_id)


def _decoder(manifest: ExportManifest, args):
    if args.stub:
        return HashDecoder()
    from .hf import HFCaptioningDecoder

    return HFCaptioningDecoder(manifest.decoder_id)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        manifest = ExportManifest.from_json(args.manifest)
        if args.command == "export-images":
            count = export_image_embeddings(manifest, _encoder(manifest, args))
            print(f"exported {count} image embeddings -> {manifest.images_store}")
        elif args.command == "export-text":
            count = export_text_embeddings(manifest, _encoder(manifest, args))
            print(f"exported {count} prompt embeddings -> {manifest.text_store}")
        elif args.command == "export-logits":
            count = export_decoder_logits(manifest, _decoder(manifest, args))
            print(f"exported decoder logits for {count} images -> {manifest.logits_file}")
        else:
            missing = validate_closure(manifest)
            if missing:
                print(f"closure violated: {len(missing)} word(s) lack prompt embeddings, "
                      f"e.g. {missing[:5]}", file=sys.stderr)
                return 1
            print("closure holds: every logits word has a prompt embedding")
        return 0
    except (ClosureError, FormatError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def console_main() -> None:
    sys.exit(main())

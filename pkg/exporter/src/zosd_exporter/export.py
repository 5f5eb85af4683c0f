"""The export operations: images, prompts, decoder logits, closure check.

Every operation computes its whole payload first and only then writes,
atomically, so a failing run never leaves a partial file behind.
"""
from __future__ import annotations

import logging

from .adapters import CaptioningDecoder, ImageTextEncoder
from .formats import (
    read_embedding_store,
    read_logits_words,
    read_split_file,
    write_embedding_store,
    write_logits_file,
)
from .manifest import ExportManifest

logger = logging.getLogger(__name__)


class ClosureError(ValueError):
    """A logits word lacks a prompt embedding in the text store."""


def split_image_ids(manifest: ExportManifest) -> list[str]:
    record = read_split_file(manifest.split_file)
    return [image["id"] for image in record["images"]]


def export_image_embeddings(manifest: ExportManifest, encoder: ImageTextEncoder) -> int:
    """Encode every test image of the split; returns the record count.

    Image ids are dataset-relative file names; any unreadable image
    aborts the run before anything is written.
    """
    vectors = {}
    for image_id in split_image_ids(manifest):
        vectors[image_id] = encoder.encode_image(manifest.dataset_path / image_id)
    write_embedding_store(vectors, manifest.images_store)
    logger.info("wrote %d image embeddings (dim %d) from %s",
                len(vectors), encoder.dim, encoder.identifier)
    return len(vectors)


def label_universe(manifest: ExportManifest) -> set[str]:
    """Seen labels of the split plus every word in the exported logits file."""
    record = read_split_file(manifest.split_file)
    universe = set(record["seen"])
    universe |= read_logits_words(manifest.logits_file)
    return universe


def export_text_embeddings(
    manifest: ExportManifest,
    encoder: ImageTextEncoder,
    universe: set[str] | None = None,
) -> int:
    """Embed one prompt per label in the universe, keyed by the full prompt.

    The default universe is the closure requirement (seen labels plus all
    logits words); the export fails before writing if any logits word
    would end up without a prompt embedding.
    """
    if universe is None:
        universe = label_universe(manifest)
    prompts = {manifest.render_prompt(label) for label in universe}
    required = {
        manifest.render_prompt(word) for word in read_logits_words(manifest.logits_file)
    }
    missing = required - prompts
    if missing:
        raise ClosureError(
            f"universe misses {len(missing)} logits word prompt(s), e.g. "
            f"{sorted(missing)[:3]}"
        )
    vectors = {prompt: encoder.encode_text(prompt) for prompt in sorted(prompts)}
    write_embedding_store(vectors, manifest.text_store)
    logger.info("wrote %d prompt embeddings from %s", len(vectors), encoder.identifier)
    return len(vectors)


def export_decoder_logits(manifest: ExportManifest, decoder: CaptioningDecoder) -> int:
    """Run stepwise generation per image and dump per-position top words."""
    records = []
    for image_id in split_image_ids(manifest):
        positions = decoder.decode_topk(
            manifest.dataset_path / image_id, manifest.k_export, manifest.max_length
        )
        canonical = [
            sorted(position, key=lambda e: (-e[1], e[0].lower(), e[0]))[: manifest.k_export]
            for position in positions
            if position
        ]
        if not canonical:
            raise ValueError(f"decoder produced no candidates for {image_id!r}")
        records.append(
            {"image_id": image_id, "stored_k": manifest.k_export, "positions": canonical}
        )
    write_logits_file(records, manifest.logits_file)
    logger.info("wrote decoder logits for %d images from %s", len(records), decoder.identifier)
    return len(records)


def validate_closure(manifest: ExportManifest) -> list[str]:
    """Words in the logits file whose prompts are absent from the text store."""
    store_keys = set(read_embedding_store(manifest.text_store))
    missing = [
        word
        for word in sorted(read_logits_words(manifest.logits_file))
        if manifest.render_prompt(word) not in store_keys
    ]
    return missing

import json

import pytest

from zosd_exporter import ExportManifest


@pytest.fixture()
def tiny_world(tmp_path):
    """Ten fake image files, a 2-seen/1-unseen split, and a manifest."""
    dataset = tmp_path / "images"
    dataset.mkdir()
    images = []
    classes = ["cat", "dog", "boat"]
    for i in range(10):
        class_name = classes[i % 3]
        image_id = f"{class_name}_{i:03d}.img"
        (dataset / image_id).write_bytes(f"pixels of {class_name} #{i}".encode())
        images.append({"id": image_id, "class": class_name})
    split = {"name": "tiny", "seen": ["cat", "dog"], "unseen": ["boat"], "images": images}
    split_path = tmp_path / "split.json"
    split_path.write_text(json.dumps(split))
    manifest = ExportManifest(
        encoder_id="stub",
        decoder_id="stub",
        dataset_path=dataset,
        split_file=split_path,
        images_store=tmp_path / "img.bin",
        text_store=tmp_path / "txt.bin",
        logits_file=tmp_path / "logits.jsonl",
        k_export=8,
        max_length=3,
    )
    return manifest

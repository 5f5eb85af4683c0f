"""Export manifests: everything a reproducible export run needs."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

DEFAULT_TEMPLATE = "This is a photo of a {}."


@dataclass
class ExportManifest:
    """One export run, fully described.

    k_export must be at least as large as any k a downstream evaluation
    will request; 35 covers the standard operating point.
    """

    encoder_id: str
    decoder_id: str
    dataset_path: Path
    split_file: Path
    images_store: Path
    text_store: Path
    logits_file: Path
    k_export: int = 35
    max_length: int = 20
    template: str = DEFAULT_TEMPLATE

    def __post_init__(self):
        for name in ("dataset_path", "split_file", "images_store", "text_store", "logits_file"):
            setattr(self, name, Path(getattr(self, name)))
        if self.k_export < 1:
            raise ValueError("k_export must be >= 1")
        if self.max_length < 1:
            raise ValueError("max_length must be >= 1")
        if self.template.count("{}") != 1:
            raise ValueError("template must contain exactly one {} marker")

    def render_prompt(self, label: str) -> str:
        return self.template.replace("{}", label, 1)

    @classmethod
    def from_json(cls, path) -> "ExportManifest":
        record = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(**record)

    def to_json(self) -> str:
        payload = {
            "encoder_id": self.encoder_id,
            "decoder_id": self.decoder_id,
            "dataset_path": str(self.dataset_path),
            "split_file": str(self.split_file),
            "images_store": str(self.images_store),
            "text_store": str(self.text_store),
            "logits_file": str(self.logits_file),
            "k_export": self.k_export,
            "max_length": self.max_length,
            "template": self.template,
        }
        return json.dumps(payload, ensure_ascii=False, indent=2)

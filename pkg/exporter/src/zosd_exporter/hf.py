"""Adapters over Hugging Face checkpoints (optional; needs the ``models`` extra).

Imports are deferred so the rest of the package works without torch
installed.  Any contrastive image-text checkpoint with projection heads
fits the encoder contract; any captioning model whose ``generate`` can
return per-step scores fits the decoder contract.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .adapters import CaptioningDecoder, ImageTextEncoder, merge_wordpieces


def _require_models():
    try:
        import torch  # noqa: F401
        import transformers  # noqa: F401
    except ImportError as exc:
        raise ImportError(
            "pretrained-model adapters need the optional dependencies: "
            "pip install 'zosd-exporter[models]'"
        ) from exc


class HFImageTextEncoder(ImageTextEncoder):
    """Contrastive image/text encoder pair loaded from a checkpoint name."""

    def __init__(self, checkpoint: str):
        _require_models()
        import torch
        from PIL import Image  # noqa: F401
        from transformers import AutoModel, AutoProcessor

        self._torch = torch
        self.model = AutoModel.from_pretrained(checkpoint).eval()
        self.processor = AutoProcessor.from_pretrained(checkpoint)
        self.identifier = checkpoint
        self.dim = int(self.model.config.projection_dim)

    def encode_image(self, path: Path) -> np.ndarray:
        from PIL import Image

        image = Image.open(path).convert("RGB")
        inputs = self.processor(images=image, return_tensors="pt")
        with self._torch.no_grad():
            features = self.model.get_image_features(**inputs)[0]
        vec = features.cpu().numpy().astype(np.float64)
        return (vec / np.linalg.norm(vec)).astype(np.float32)

    def encode_text(self, text: str) -> np.ndarray:
        inputs = self.processor(text=[text], return_tensors="pt", padding=True)
        with self._torch.no_grad():
            features = self.model.get_text_features(**inputs)[0]
        vec = features.cpu().numpy().astype(np.float64)
        return (vec / np.linalg.norm(vec)).astype(np.float32)


class HFCaptioningDecoder(CaptioningDecoder):
    """Captioning model driven stepwise, reporting top vocabulary slices.

    Generation is greedy; at every step the full next-token distribution
    is snapshotted, top raw tokens are detokenized, and wordpieces are
    merged by the shared policy before truncation to k.
    """

    def __init__(self, checkpoint: str, raw_window: int = 4):
        _require_models()
        import torch
        from transformers import AutoModelForVision2Seq, AutoProcessor

        self._torch = torch
        self.model = AutoModelForVision2Seq.from_pretrained(checkpoint).eval()
        self.processor = AutoProcessor.from_pretrained(checkpoint)
        self.identifier = checkpoint
        # Take raw_window * k raw tokens per step so that merging and
        # piece-dropping still leave k whole words.
        self.raw_window = int(raw_window)

    def decode_topk(self, path: Path, k: int, max_length: int) -> list[list[tuple[str, float]]]:
        from PIL import Image

        image = Image.open(path).convert("RGB")
        inputs = self.processor(images=image, return_tensors="pt")
        with self._torch.no_grad():
            generated = self.model.generate(
                **inputs,
                max_new_tokens=max_length,
                do_sample=False,
                output_scores=True,
                return_dict_in_generate=True,
            )
        tokenizer = getattr(self.processor, "tokenizer", self.processor)
        positions = []
        for step_scores in generated.scores:
            logprobs = self._torch.log_softmax(step_scores[0], dim=-1)
            values, indices = self._torch.topk(logprobs, k=min(self.raw_window * k, logprobs.shape[-1]))
            pieces = [
                (tokenizer.convert_ids_to_tokens(int(idx)), float(val))
                for val, idx in zip(values, indices)
            ]
            positions.append(merge_wordpieces(pieces)[:k])
        return positions

#!/usr/bin/env python3
"""The three on-disk formats, written and read back.

* binary embedding store (magic ZOSDEMB1, little-endian, float32),
* candidate logits as JSON Lines, sorted per position,
* split files as JSON.

Everything lands in a temp directory; the CLI consumes the same files:

    zosd score img-1 --embeddings-images img.bin --embeddings-text txt.bin \
        --logits logits.jsonl --seen cat,dog --k 3
"""

import tempfile
from pathlib import Path

import numpy as np

from zosd import (
    SplitSpec,
    normalize,
    read_logits,
    read_split,
    read_store,
    write_logits,
    write_split,
    write_store,
)
from zosd.candidates import DecoderOutput, position_topk
from zosd.core import DEFAULT_TEMPLATE, render_prompt

out = Path(tempfile.mkdtemp(prefix="zosd-formats-"))
rng = np.random.default_rng(0)

# --- embedding store ------------------------------------------------------
image_store = {f"img-{i}": normalize(rng.normal(size=8)) for i in range(3)}
text_store = {
    render_prompt(DEFAULT_TEMPLATE, name): normalize(rng.normal(size=8))
    for name in ("cat", "dog", "boat")
}
write_store(image_store, out / "img.bin")
write_store(text_store, out / "txt.bin")

raw = (out / "img.bin").read_bytes()
print(f"img.bin: {len(raw)} bytes, magic {raw[:8]!r}")
loaded = read_store(out / "img.bin")
print(f"  round-trip keys: {list(loaded)}")
print(f"  bit-identical: {all(loaded[k].values.tobytes() == image_store[k].values.tobytes() for k in image_store)}")

# --- candidate logits -----------------------------------------------------
outputs = [
    DecoderOutput(
        "img-0",
        (
            position_topk([("boat", -0.2), ("water", -0.8)]),
            position_topk([("sea", -0.4), ("boat", -0.5)]),
        ),
        stored_k=2,
    )
]
write_logits(outputs, out / "logits.jsonl")
print(f"\nlogits.jsonl:\n  {(out / 'logits.jsonl').read_text().strip()}")
print(f"  parsed positions: {read_logits(out / 'logits.jsonl')['img-0'].length}")

# --- split file -----------------------------------------------------------
split = SplitSpec(
    "demo-split",
    seen_classes=("cat", "dog"),
    unseen_classes=("boat",),
    images=(("img-0", "boat"), ("img-1", "cat"), ("img-2", "dog")),
)
write_split(split, out / "split.json")
print(f"\nsplit.json openness: {read_split(out / 'split.json').openness_pct:.2f}%")

print(f"\nfiles in {out}:")
for path in sorted(out.iterdir()):
    print(f"  {path.name:<14} {path.stat().st_size:>6} bytes")

#!/usr/bin/env python3
"""How per-position decoder logits become a candidate label set.

Walks one hand-built decoder output through the extraction rules: top-k
window per position, case-insensitive dedup in scan order, stop-word
filtering, and dedup against the seen labels.
"""

from zosd import ScoringConfig, extract_candidates, seen_label
from zosd.candidates import DecoderOutput, StopList, position_topk

# A 3-position decoder output, stored_k = 4. Function words rank high,
# as they do in real caption decoders.
decoder_output = DecoderOutput(
    "boat-demo",
    (
        position_topk([("a", -0.1), ("boat", -0.3), ("ship", -0.9), ("the", -1.0)]),
        position_topk([("boat", -0.2), ("water", -0.5), ("sailing", -0.7), ("dog", -1.1)]),
        position_topk([("sea", -0.4), ("Boat", -0.6), ("harbor", -0.8), ("sky", -1.2)]),
    ),
    stored_k=4,
)

seen = (seen_label("dog"), seen_label("cat"))

print("positions (word, logprob):")
for i, pos in enumerate(decoder_output.positions):
    print(f"  p{i}: {list(pos.entries)}")
print(f"seen labels: {[l.name for l in seen]}\n")

variants = [
    ("k=4, all filters on", ScoringConfig(k=4)),
    ("k=2, all filters on", ScoringConfig(k=2)),
    ("k=4, keep stop words", ScoringConfig(k=4, filter_stopwords=False)),
    ("k=4, keep seen collisions", ScoringConfig(k=4, dedup_against_seen=False)),
]
for title, config in variants:
    candidates = extract_candidates(decoder_output, config, seen=seen)
    print(f"{title:<28} -> {list(candidates.names)}")

print()
print("Notes: 'Boat' at p2 is dropped (case-insensitive duplicate of the")
print("p0 'boat'); 'dog' is dropped while dedup against seen is on; 'a'")
print("and 'the' survive only with the stop-word filter off.")

custom = extract_candidates(
    decoder_output, ScoringConfig(k=4), StopList(frozenset({"sea", "sky", "a", "the"})), seen
)
print(f"\ncustom stop list {{sea, sky, a, the}} -> {list(custom.names)}")

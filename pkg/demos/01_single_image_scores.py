#!/usr/bin/env python3
"""Score one seen-class and one unseen-class image, end to end.

Builds a tiny deterministic synthetic world: six seen class names, plus
images of a seen class ("dog") and of a class nobody announced ("boat").
Each image gets a decoder output whose top word per position is its own
class name, so the unseen image's candidate set contains "boat" while
the seen image's candidate set has "dog" deduplicated away.
"""

from zosd import ScoringConfig, run_inference, seen_label, top_contributors
from zosd.bench import SyntheticLogitStore
from zosd.store import SyntheticBackend

SEEN = ("airplane", "automobile", "bird", "cat", "deer", "dog")

image_classes = {"dog-0001": "dog", "boat-0001": "boat"}
backend = SyntheticBackend(image_classes, dim=512, salt=42, epsilon=0.1)
logit_store = SyntheticLogitStore(image_classes, stored_k=35, length=3, salt=42)

seen = tuple(seen_label(name) for name in SEEN)
config = ScoringConfig()  # temperature 100, k 35, stopword filter on

print(f"seen labels: {', '.join(SEEN)}")
print(f"config: temperature={config.temperature} k={config.k}\n")

for image_id in ("dog-0001", "boat-0001"):
    result = run_inference(image_id, seen, backend, logit_store, config)
    truth = "seen" if image_classes[image_id] in SEEN else "unseen"
    print(f"{image_id}  (ground truth: {truth} class)")
    print(f"  open-set score : {result.score:.4f}   (mass on generated labels)")
    print(f"  msp baseline   : {result.msp_score:.4f}   (1 - max seen-only softmax)")
    print(f"  predicted seen : {result.predicted_seen.name}")
    print("  labels with probability > 0.1:")
    for label, prob in top_contributors(result, 0.1):
        print(f"    {label.name:<12} {label.kind.value:<10} {prob:.4f}")
    print()

print("The unseen image concentrates its probability mass on generated")
print("candidates (high score); the seen image keeps it on its own label.")

"""Desk-scale synthetic benchmarks.

Builds fully deterministic worlds in which detection quality is known by
construction: every image embedding is epsilon-blended with its class
prompt (see ``store.SyntheticBackend``), and every image comes with a
synthetic decoder output whose top-ranked word is the image's own class
name, followed by a function word and neutral filler nouns.  For a
seen-class image the class word is deduplicated away, so its candidate
set carries no aligned direction; for an unseen-class image the class
word survives into the candidates and soaks up probability mass.

Split layouts:

* rotating: split ``s`` takes ``n_seen`` consecutive classes starting at
  offset ``s`` (cyclically) as seen, the rest unseen.  Mirrors the usual
  6/4 style benchmarks where reruns rotate the seen set.
* consecutive: split ``s`` takes classes ``[s*n_seen, (s+1)*n_seen)`` as
  seen.  Mirrors the 20-consecutive-classes rule of 100-class benchmarks.
"""
from __future__ import annotations

from typing import Mapping

from .candidates import DecoderOutput, PositionTopK
from .core import DEFAULT_TEMPLATE, PromptTemplate
from .errors import MissingDecoderOutputError
from .eval import SplitSpec
from .store import SyntheticBackend, fnv1a64, splitmix64_uniforms

CIFAR10_STYLE_CLASSES = (
    "airplane", "automobile", "bird", "cat", "deer",
    "dog", "frog", "horse", "ship", "truck",
)

# Function words the synthetic decoder emits near the top of each
# position, exercising the stop-word filter the way real decoders do.
_FUNCTION_WORDS = ("the", "a", "of", "with", "on", "in")

# Neutral filler nouns; deliberately disjoint from CIFAR10_STYLE_CLASSES.
_FILLER_WORDS = (
    "table", "river", "cloud", "guitar", "mountain", "window", "garden",
    "bottle", "street", "forest", "candle", "bridge", "market", "pillow",
    "ladder", "mirror", "basket", "meadow", "engine", "harbor", "jacket",
    "kettle", "lantern", "napkin", "orchard", "pencil", "carpet", "ribbon",
    "saddle", "teapot", "valley", "wagon", "anchor", "barrel", "canyon",
    "desert", "fountain", "glacier", "hammer", "island", "jungle", "kitchen",
    "library", "museum", "notebook", "ocean", "palace", "quarry", "rooftop",
    "stadium", "tunnel", "umbrella", "village", "workshop", "switch",
    "blanket", "compass", "doorway", "envelope", "fireplace", "gateway",
    "helmet", "inkwell", "journal",
)


def make_image_pool(
    classes: tuple[str, ...], images_per_class: int
) -> tuple[tuple[str, str], ...]:
    """Deterministic (image_id, class) pool shared by all splits."""
    return tuple(
        (f"{class_name}-{index:04d}", class_name)
        for class_name in classes
        for index in range(images_per_class)
    )


def make_rotating_splits(
    classes: tuple[str, ...] = CIFAR10_STYLE_CLASSES,
    n_seen: int = 6,
    n_splits: int = 5,
    images_per_class: int = 50,
    name_prefix: str = "split",
) -> tuple[SplitSpec, ...]:
    if not (1 <= n_seen < len(classes)):
        raise ValueError(f"n_seen must lie in [1, {len(classes)})")
    pool = make_image_pool(classes, images_per_class)
    splits = []
    for s in range(n_splits):
        seen = tuple(classes[(s + j) % len(classes)] for j in range(n_seen))
        unseen = tuple(c for c in classes if c not in seen)
        splits.append(SplitSpec(f"{name_prefix}-{s}", seen, unseen, pool))
    return tuple(splits)


def make_consecutive_splits(
    classes: tuple[str, ...],
    n_seen: int = 20,
    n_splits: int = 5,
    images_per_class: int = 20,
    name_prefix: str = "split",
) -> tuple[SplitSpec, ...]:
    if n_splits * n_seen > len(classes):
        raise ValueError("not enough classes for that many disjoint seen blocks")
    pool = make_image_pool(classes, images_per_class)
    splits = []
    for s in range(n_splits):
        seen = tuple(classes[s * n_seen : (s + 1) * n_seen])
        unseen = tuple(c for c in classes if c not in seen)
        splits.append(SplitSpec(f"{name_prefix}-{s}", seen, unseen, pool))
    return tuple(splits)


def synthetic_decoder_output(
    image_id: str,
    class_name: str,
    stored_k: int = 35,
    length: int = 3,
    salt: int = 0,
) -> DecoderOutput:
    """Deterministic decoder output for one image.

    Each position ranks the image's class word first, one function word
    second, then filler nouns rotated by a per-position hash.  Logprobs
    decrease strictly with rank, so on-disk sortedness holds trivially.
    """
    if stored_k < 2:
        raise ValueError("stored_k must be >= 2")
    positions = []
    for position in range(length):
        seed = fnv1a64(f"{image_id}#pos{position}".encode("utf-8")) ^ salt
        u = splitmix64_uniforms(seed, 2)
        function_word = _FUNCTION_WORDS[int(u[0] * len(_FUNCTION_WORDS)) % len(_FUNCTION_WORDS)]
        offset = int(u[1] * len(_FILLER_WORDS)) % len(_FILLER_WORDS)
        words = [class_name]
        if function_word.lower() != class_name.lower():
            words.append(function_word)
        for j in range(stored_k - 2):
            filler = _FILLER_WORDS[(offset + j) % len(_FILLER_WORDS)]
            if filler not in words:
                words.append(filler)
        entries = tuple(
            (word, -0.1 * (rank + 1) - 0.01 * position) for rank, word in enumerate(words)
        )
        positions.append(PositionTopK(entries))
    return DecoderOutput(image_id, tuple(positions), stored_k)


class SyntheticLogitStore:
    """On-the-fly decoder outputs for a synthetic image pool."""

    def __init__(
        self,
        image_classes: Mapping[str, str],
        stored_k: int = 35,
        length: int = 3,
        salt: int = 0,
    ):
        self._classes = dict(image_classes)
        self.stored_k = int(stored_k)
        self.length = int(length)
        self.salt = int(salt)
        self._cache: dict[str, DecoderOutput] = {}

    def get(self, image_id: str) -> DecoderOutput:
        cached = self._cache.get(image_id)
        if cached is not None:
            return cached
        try:
            class_name = self._classes[image_id]
        except KeyError:
            raise MissingDecoderOutputError(image_id) from None
        out = synthetic_decoder_output(image_id, class_name, self.stored_k, self.length, self.salt)
        self._cache[image_id] = out
        return out

    def __contains__(self, image_id: str) -> bool:
        return image_id in self._classes

    def image_ids(self) -> tuple[str, ...]:
        return tuple(self._classes)


def build_world(
    splits: tuple[SplitSpec, ...],
    dim: int = 512,
    salt: int = 42,
    epsilon: float = 0.1,
    template: PromptTemplate = DEFAULT_TEMPLATE,
    stored_k: int = 35,
    length: int = 3,
) -> tuple[SyntheticBackend, SyntheticLogitStore]:
    """Backend and logit store covering every image of the given splits."""
    image_classes: dict[str, str] = {}
    for split in splits:
        for image_id, class_name in split.images:
            previous = image_classes.get(image_id)
            if previous is not None and previous != class_name:
                raise ValueError(f"image {image_id!r} has conflicting classes across splits")
            image_classes[image_id] = class_name
    backend = SyntheticBackend(
        image_classes, dim=dim, salt=salt, epsilon=epsilon, template=template
    )
    logit_store = SyntheticLogitStore(image_classes, stored_k=stored_k, length=length, salt=salt)
    return backend, logit_store

"""Exporter: pretrained encoders/decoders in, zosd file formats out."""

from .adapters import (
    CaptioningDecoder,
    HashDecoder,
    HashEncoder,
    ImageTextEncoder,
    merge_wordpieces,
)
from .export import (
    ClosureError,
    export_decoder_logits,
    export_image_embeddings,
    export_text_embeddings,
    label_universe,
    validate_closure,
)
from .formats import (
    FormatError,
    read_embedding_store,
    read_logits_words,
    read_split_file,
    write_embedding_store,
    write_logits_file,
)
from .manifest import ExportManifest

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"

"""Exception hierarchy shared by all engine modules.

Three broad families matter operationally: configuration problems
(caller asked for something inconsistent), missing or malformed data
(a store lacks a key, a file is corrupt), and violated numerical
preconditions.  The CLI maps these onto its stable exit codes.
"""
from __future__ import annotations


class EngineError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(EngineError):
    """The requested configuration is internally inconsistent."""


class KTooLargeError(ConfigurationError):
    """Requested top-k exceeds the k stored in the logits file."""


class InvalidCountsError(ConfigurationError):
    """Class counts passed to the openness formula violate its preconditions."""


class MissingDataError(EngineError):
    """A required record is absent from a store or backend."""


class MissingImageError(MissingDataError):
    def __init__(self, image_id: str):
        super().__init__(f"no image embedding for id {image_id!r}")
        self.image_id = image_id


class MissingTextEmbeddingError(MissingDataError):
    def __init__(self, label: str, prompt: str | None = None):
        detail = f" (prompt {prompt!r})" if prompt is not None else ""
        super().__init__(f"no text embedding for label {label!r}{detail}")
        self.label = label
        self.prompt = prompt


class MissingDecoderOutputError(MissingDataError):
    def __init__(self, image_id: str):
        super().__init__(f"no decoder output for image id {image_id!r}")
        self.image_id = image_id


class StoreFormatError(EngineError):
    """An on-disk artifact violates its declared format."""


class BadMagicError(StoreFormatError):
    pass


class TruncatedFileError(StoreFormatError):
    pass


class DuplicateKeyError(StoreFormatError):
    pass


class NormViolationError(StoreFormatError):
    """A stored vector is not unit-norm within the at-rest tolerance."""


class ZeroVectorError(EngineError, ValueError):
    pass


class NonFiniteError(EngineError, ValueError):
    pass


class DimMismatchError(EngineError, ValueError):
    pass


class EmptyInputError(EngineError, ValueError):
    pass


class ShapeMismatchError(EngineError, ValueError):
    pass


class IndexOutOfRangeError(EngineError, ValueError):
    pass


class EmptySeenError(EngineError, ValueError):
    pass


class OneClassOnlyError(EngineError, ValueError):
    """AUROC needs at least one seen and one unseen outcome."""


class EmptyListError(EngineError, ValueError):
    pass


class OutOfRangeError(EngineError, ValueError):
    pass

"""Checkpoint-to-audit bridge: encodes images and captions into the
engine's EMB1 and metadata CSV formats."""

__version__ = "0.1.0"

from .encoder import MODEL_ALIASES, CheckpointEncoder, EncoderSpec, resolve_model
from .errors import AdapterError, EncodeError, InputError, LabelError
from .export import (
    BaselineExportResult,
    ImageExportResult,
    TextExportResult,
    encode_baseline,
    encode_images,
    encode_texts,
)
from .labels import AttributeRow, load_attributes, map_gender, map_race

__all__ = [
    "__version__",
    "MODEL_ALIASES",
    "CheckpointEncoder",
    "EncoderSpec",
    "resolve_model",
    "AdapterError",
    "EncodeError",
    "InputError",
    "LabelError",
    "BaselineExportResult",
    "ImageExportResult",
    "TextExportResult",
    "encode_baseline",
    "encode_images",
    "encode_texts",
    "AttributeRow",
    "load_attributes",
    "map_gender",
    "map_race",
]

"""embx-export: transformer token embeddings for segment files, as EMBX."""

from .errors import (
    ExportError,
    ModelLoadError,
    SegmentFileError,
    TokenizationEmpty,
)
from .exporter import (
    DEFAULT_MODEL,
    RECOMMENDED_LAYERS,
    EncodedText,
    ExportConfig,
    ExportReport,
    de_subword,
    export_embeddings,
    load_transformers_encoder,
    resolve_layer,
)
from .formats import (
    SegmentKey,
    SegmentText,
    read_segment_file,
    write_embx,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_MODEL",
    "EncodedText",
    "ExportConfig",
    "ExportError",
    "ExportReport",
    "ModelLoadError",
    "RECOMMENDED_LAYERS",
    "SegmentFileError",
    "SegmentKey",
    "SegmentText",
    "TokenizationEmpty",
    "de_subword",
    "export_embeddings",
    "load_transformers_encoder",
    "read_segment_file",
    "resolve_layer",
    "write_embx",
]

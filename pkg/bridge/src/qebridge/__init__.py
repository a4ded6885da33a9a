"""Bridge from pretrained transformer encoders to QEEMB1 embedding files."""

from .errors import (
    EmptyLine,
    EncoderUnavailable,
    LayerOutOfRange,
    QEBridgeError,
)
from .export import (
    DEFAULT_UNK,
    LAYER_CONVENTION,
    ExportRequest,
    export_embeddings,
    tokenize_map,
)

__all__ = [
    "DEFAULT_UNK",
    "LAYER_CONVENTION",
    "EmptyLine",
    "EncoderUnavailable",
    "ExportRequest",
    "LayerOutOfRange",
    "QEBridgeError",
    "export_embeddings",
    "tokenize_map",
]

__version__ = "0.1.0"

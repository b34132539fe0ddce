"""Embedding export for the relevance/topic pipeline."""
from .exporter import (
    DEFAULT_BATCH,
    DEFAULT_MODEL,
    ExportError,
    ExportJob,
    export_embeddings,
    load_encoder,
    read_items,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_BATCH",
    "DEFAULT_MODEL",
    "ExportError",
    "ExportJob",
    "export_embeddings",
    "load_encoder",
    "read_items",
]

"""vitfeat: frozen ViT deep-feature export to the shared feature-file format."""

from .extract import DimensionMismatch, MissingCheckpoint, extract
from .models import ExtractorModel, get_model, list_models

__version__ = "0.1.0"

__all__ = [
    "DimensionMismatch",
    "ExtractorModel",
    "MissingCheckpoint",
    "extract",
    "get_model",
    "list_models",
]

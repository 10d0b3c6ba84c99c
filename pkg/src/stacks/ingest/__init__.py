"""Staged ingest pipeline: every inbound record is validated, normalized,
and crosswalked to the qualified Dublin Core lingua franca before a batch
commit moves it into the repository."""

from .crosswalks import (
    CrosswalkRegistry,
    NativeRecord,
    ValidationReport,
    default_crosswalk_dir,
)
from .pipeline import IngestPipeline, IngestResult

__all__ = [
    "CrosswalkRegistry",
    "IngestPipeline",
    "IngestResult",
    "NativeRecord",
    "ValidationReport",
    "default_crosswalk_dir",
]

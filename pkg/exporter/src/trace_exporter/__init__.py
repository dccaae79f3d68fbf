"""Checkpoint-to-trace adapter for the turn-taking evaluation pipeline."""

from .exporter import (
    BIN_DURATIONS,
    NUM_LABELS,
    SAMPLE_RATE,
    TRACE_MAGIC,
    TRACE_VERSION,
    WEIGHTINGS,
    ExportError,
    ExportManifest,
    export,
    load_checkpoint,
    marginals,
    read_stereo,
)

__version__ = "0.1.0"

__all__ = [
    "BIN_DURATIONS",
    "NUM_LABELS",
    "SAMPLE_RATE",
    "TRACE_MAGIC",
    "TRACE_VERSION",
    "WEIGHTINGS",
    "ExportError",
    "ExportManifest",
    "export",
    "load_checkpoint",
    "marginals",
    "read_stereo",
    "__version__",
]

"""Automatic turn-taking evaluation for synthesized speech.

The package covers the full pipeline: mining statement+question pairs from
task-oriented dialogs, normalizing and editing the rendered audio, encoding
joint voice-activity windows, aggregating predicted label distributions into
agent-speaking probabilities, and classifying turn-hold/turn-yield behavior.
"""

from .aggregation import (
    FUT_BINS,
    NOW_BINS,
    ProbTrace,
    region_probs,
    trace_from_distributions,
)
from .audio import (
    Alignment,
    AudioBuffer,
    WordSpan,
    assemble_stereo,
    load_wav,
    normalize_silences,
    parse_alignment,
    save_wav,
    textgrid_to_alignment,
    write_alignment,
)
from .codec import (
    DEFAULT_CONFIG,
    NUM_LABELS,
    CodecConfig,
    decode_label,
    encode_window,
    swap_speakers,
    window_from_bins,
)
from .corpus import (
    CONDITIONS,
    FilterConfig,
    SentencePair,
    extract_pairs,
    filter_reason,
    load_dialogs,
    permute,
)
from .errors import InputError, ValidationError, VapEvalError
from .metrics import (
    METRIC_NAMES,
    ClassifiedSample,
    CorpusReport,
    MetricSummary,
    TurnMetrics,
    TurnRegions,
    aggregate_corpus,
    classify,
    derive_regions,
    summarize,
)
from .predictor import (
    FrameDistTrace,
    VaScenario,
    load_ptrace,
    load_trace,
    oracle_distributions,
    scenario,
    write_ptrace,
    write_trace,
)
from .prosody import (
    F0Contour,
    ManipulationParams,
    ManipulationResult,
    apply_gain,
    estimate_f0,
    flatten_pitch,
    manipulate_final_syllable,
    stretch,
)

__version__ = "0.1.0"

__all__ = [
    "Alignment",
    "AudioBuffer",
    "CONDITIONS",
    "ClassifiedSample",
    "CodecConfig",
    "CorpusReport",
    "DEFAULT_CONFIG",
    "F0Contour",
    "FilterConfig",
    "FrameDistTrace",
    "FUT_BINS",
    "InputError",
    "ManipulationParams",
    "ManipulationResult",
    "METRIC_NAMES",
    "MetricSummary",
    "NOW_BINS",
    "NUM_LABELS",
    "ProbTrace",
    "SentencePair",
    "TurnMetrics",
    "TurnRegions",
    "VaScenario",
    "ValidationError",
    "VapEvalError",
    "WordSpan",
    "aggregate_corpus",
    "apply_gain",
    "assemble_stereo",
    "classify",
    "decode_label",
    "derive_regions",
    "encode_window",
    "estimate_f0",
    "extract_pairs",
    "filter_reason",
    "flatten_pitch",
    "load_dialogs",
    "load_ptrace",
    "load_trace",
    "load_wav",
    "manipulate_final_syllable",
    "normalize_silences",
    "oracle_distributions",
    "parse_alignment",
    "permute",
    "region_probs",
    "save_wav",
    "scenario",
    "stretch",
    "summarize",
    "swap_speakers",
    "textgrid_to_alignment",
    "trace_from_distributions",
    "window_from_bins",
    "write_alignment",
    "write_ptrace",
    "write_trace",
]

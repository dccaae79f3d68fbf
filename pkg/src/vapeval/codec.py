"""Discrete projection-state codec.

A projection window covers the next 2 s of dialog for two speakers.  Each
speaker's half is discretized into four bins of increasing duration
(0.2 s, 0.4 s, 0.6 s, 0.8 s); a bin is active when strictly more than half
of its frames carry voice activity.  The 8 resulting booleans pack into an
integer label in [0, 255].

Bit layout: the agent (speaker 0) occupies the high nibble, the user
(speaker 1) the low nibble, and within each nibble bin 0 (nearest future)
is the most significant bit.  Label 240 therefore reads "agent fully
active"; label 15 is its mirror image.
"""

from dataclasses import dataclass

import numpy as np

NUM_LABELS = 256
NUM_BINS = 4
NUM_SPEAKERS = 2

AGENT = 0
USER = 1


@dataclass(frozen=True)
class CodecConfig:
    """Bin/frame geometry of the projection window."""

    bin_durations: tuple[float, ...] = (0.2, 0.4, 0.6, 0.8)
    horizon: float = 2.0
    frame_rate: float = 50.0

    def __post_init__(self):
        if len(self.bin_durations) != NUM_BINS:
            raise ValueError(f"expected {NUM_BINS} bin durations, got {len(self.bin_durations)}")
        if any(d <= 0 for d in self.bin_durations):
            raise ValueError("bin durations must be positive")
        if list(self.bin_durations) != sorted(set(self.bin_durations)):
            raise ValueError("bin durations must be strictly increasing")
        if abs(sum(self.bin_durations) - self.horizon) > 1e-9:
            raise ValueError(
                f"bin durations sum to {sum(self.bin_durations)}, horizon is {self.horizon}"
            )
        if self.frame_rate <= 0:
            raise ValueError("frame rate must be positive")
        for d in self.bin_durations:
            frames = d * self.frame_rate
            if abs(frames - round(frames)) > 1e-9:
                raise ValueError(
                    f"bin duration {d} s is not a whole number of frames at {self.frame_rate} Hz"
                )

    @property
    def horizon_frames(self) -> int:
        return int(round(self.horizon * self.frame_rate))


DEFAULT_CONFIG = CodecConfig()


def bin_frame_spans(cfg: CodecConfig = DEFAULT_CONFIG) -> list[tuple[int, int]]:
    """Half-open [start, end) frame ranges of the four bins, covering [0, F)."""
    spans = []
    start = 0
    for d in cfg.bin_durations:
        n = int(round(d * cfg.frame_rate))
        spans.append((start, start + n))
        start += n
    return spans


def encode_window(window: np.ndarray, cfg: CodecConfig = DEFAULT_CONFIG) -> int:
    """Encode a (2, F) boolean voice-activity window into a label.

    A bin is active iff strictly more than half of its frames are active;
    an exact half is inactive.
    """
    window = np.asarray(window)
    F = cfg.horizon_frames
    if window.shape != (NUM_SPEAKERS, F):
        raise ValueError(f"expected window of shape (2, {F}), got {window.shape}")
    label = 0
    for speaker in range(NUM_SPEAKERS):
        for i, (lo, hi) in enumerate(bin_frame_spans(cfg)):
            count = int(np.count_nonzero(window[speaker, lo:hi]))
            if 2 * count > hi - lo:
                label |= 1 << (7 - (4 * speaker + i))
    return label


def decode_label(label: int) -> np.ndarray:
    """Decode a label into its (2, 4) boolean bin matrix."""
    if not 0 <= label <= 255:
        raise ValueError(f"label must be in [0, 255], got {label}")
    bins = np.zeros((NUM_SPEAKERS, NUM_BINS), dtype=bool)
    for speaker in range(NUM_SPEAKERS):
        for i in range(NUM_BINS):
            bins[speaker, i] = bool((label >> (7 - (4 * speaker + i))) & 1)
    return bins


def window_from_bins(bins: np.ndarray, cfg: CodecConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Synthesize a (2, F) window whose every bin span is fully on or off.

    encode_window(window_from_bins(decode_label(y))) == y for all y.
    """
    bins = np.asarray(bins, dtype=bool)
    if bins.shape != (NUM_SPEAKERS, NUM_BINS):
        raise ValueError(f"expected bins of shape (2, 4), got {bins.shape}")
    window = np.zeros((NUM_SPEAKERS, cfg.horizon_frames), dtype=bool)
    for speaker in range(NUM_SPEAKERS):
        for i, (lo, hi) in enumerate(bin_frame_spans(cfg)):
            window[speaker, lo:hi] = bins[speaker, i]
    return window


def swap_speakers(label: int) -> int:
    """Mirror a label across the two speaker channels (swap nibbles)."""
    if not 0 <= label <= 255:
        raise ValueError(f"label must be in [0, 255], got {label}")
    return ((label & 0x0F) << 4) | ((label & 0xF0) >> 4)

"""Per-frame label-distribution sources: trace files and a future-leak oracle.

Binary trace format (little-endian):

    magic   4 bytes  "VAPT"
    version u8       1
    frame_rate f32
    frame_count u32
    frames  frame_count x 256 f32, frame-major

A lighter text format carries already-aggregated probabilities for quick
fixtures: a `frame_rate=<Hz>` header line, then one `p_now,p_fut` pair per
line.

The oracle turns a scripted voice-activity scenario into the trace a
perfect predictor would emit: at each frame it one-hot encodes the true
upcoming 2 s window, so downstream classification is fully determined by
scenario construction.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import codec
from .aggregation import DISTRIBUTION_SUM_TOL, ProbTrace
from .codec import CodecConfig, DEFAULT_CONFIG
from .errors import InputError, ValidationError

TRACE_MAGIC = b"VAPT"
TRACE_VERSION = 1
_HEADER = struct.Struct("<4sBfI")
_FRAME_BYTES = codec.NUM_LABELS * 4


@dataclass(frozen=True)
class FrameDistTrace:
    """A (N, 256) float32 distribution sequence at a fixed frame rate."""

    frame_rate: float
    probs: np.ndarray

    def __post_init__(self):
        probs = np.ascontiguousarray(self.probs, dtype=np.float32)
        object.__setattr__(self, "probs", probs)
        if self.frame_rate <= 0:
            raise ValueError("frame rate must be positive")
        if probs.ndim != 2 or probs.shape[1] != codec.NUM_LABELS or len(probs) == 0:
            raise ValueError(f"expected non-empty (N, {codec.NUM_LABELS}) array, got {probs.shape}")

    def __len__(self) -> int:
        return len(self.probs)


def _validate_rows(probs: np.ndarray, source: str) -> None:
    if np.any(probs < 0):
        row = int(np.argwhere(np.any(probs < 0, axis=1))[0, 0])
        raise ValidationError(f"{source}: row {row} contains a negative probability")
    sums = probs.sum(axis=1, dtype=np.float64)
    bad = np.abs(sums - 1.0) > DISTRIBUTION_SUM_TOL
    if np.any(bad):
        row = int(np.argmax(bad))
        raise ValidationError(f"{source}: row {row} sums to {sums[row]:.6f}, expected 1 +/- {DISTRIBUTION_SUM_TOL}")


def write_trace(path, trace: FrameDistTrace) -> None:
    """Write the binary trace format; probabilities are stored as float32."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(TRACE_MAGIC, TRACE_VERSION, trace.frame_rate, len(trace)))
        fh.write(trace.probs.astype("<f4", copy=False).tobytes())


def load_trace(path) -> FrameDistTrace:
    """Read and validate a binary trace file."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read trace {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise ValidationError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, frame_rate, count = _HEADER.unpack_from(raw)
    if magic != TRACE_MAGIC:
        raise ValidationError(f"{path}: bad magic {magic!r}, expected {TRACE_MAGIC!r}")
    if version != TRACE_VERSION:
        raise ValidationError(f"{path}: unsupported version {version}")
    if not np.isfinite(frame_rate) or frame_rate <= 0:
        raise ValidationError(f"{path}: header frame rate {frame_rate} is not positive")
    body = raw[_HEADER.size:]
    if len(body) % _FRAME_BYTES != 0:
        row = len(body) // _FRAME_BYTES
        values = (len(body) % _FRAME_BYTES) // 4
        raise ValidationError(
            f"{path}: row {row} holds {values} values, expected {codec.NUM_LABELS}"
        )
    rows = len(body) // _FRAME_BYTES
    if rows != count:
        raise ValidationError(f"{path}: header declares {count} frames but file holds {rows}")
    if rows == 0:
        raise ValidationError(f"{path}: trace contains no frames")
    probs = np.frombuffer(body, dtype="<f4").reshape(rows, codec.NUM_LABELS)
    _validate_rows(probs, str(path))
    return FrameDistTrace(frame_rate=frame_rate, probs=probs)


def write_ptrace(path, trace: ProbTrace) -> None:
    """Write the text p-trace format: header line, then p_now,p_fut per frame."""
    lines = [f"frame_rate={float(trace.frame_rate)!r}"]
    lines += [
        f"{float(now)!r},{float(fut)!r}" for now, fut in zip(trace.p_now, trace.p_fut)
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def load_ptrace(path) -> ProbTrace:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read p-trace {path}: {exc}") from exc
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines or not lines[0].startswith("frame_rate="):
        raise ValidationError(f"{path}: first line must be 'frame_rate=<Hz>'")
    try:
        frame_rate = float(lines[0].split("=", 1)[1])
    except ValueError as exc:
        raise ValidationError(f"{path}: unparseable frame rate {lines[0]!r}") from exc
    now, fut = [], []
    for i, line in enumerate(lines[1:], start=1):
        parts = line.split(",")
        if len(parts) != 2:
            raise ValidationError(f"{path}: line {i + 1} must be 'p_now,p_fut', got {line!r}")
        try:
            now.append(float(parts[0]))
            fut.append(float(parts[1]))
        except ValueError as exc:
            raise ValidationError(f"{path}: line {i + 1} holds a non-numeric value") from exc
    if not now:
        raise ValidationError(f"{path}: p-trace contains no frames")
    try:
        return ProbTrace(frame_rate=frame_rate, p_now=np.array(now), p_fut=np.array(fut))
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class VaScenario:
    """Scripted two-speaker voice activity: (onset, offset) intervals in seconds.

    intervals[0] is the agent channel, intervals[1] the user channel.
    """

    duration: float
    intervals: tuple[tuple[tuple[float, float], ...], tuple[tuple[float, float], ...]]

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("scenario duration must be positive")
        if len(self.intervals) != 2:
            raise ValueError("expected intervals for exactly two speakers")
        for speaker, spans in enumerate(self.intervals):
            last_off = 0.0
            for on, off in sorted(spans):
                if on < -1e-9 or off > self.duration + 1e-9:
                    raise ValueError(f"speaker {speaker} interval ({on}, {off}) outside [0, {self.duration}]")
                if off <= on:
                    raise ValueError(f"speaker {speaker} interval ({on}, {off}) is empty")
                if on < last_off - 1e-9:
                    raise ValueError(f"speaker {speaker} intervals overlap near {on}")
                last_off = off

    def rasterize(self, frame_rate: float) -> np.ndarray:
        """(2, N) boolean grid; frame k is active iff its midpoint falls in an interval."""
        n = int(round(self.duration * frame_rate))
        grid = np.zeros((2, n), dtype=bool)
        mids = (np.arange(n) + 0.5) / frame_rate
        for speaker, spans in enumerate(self.intervals):
            for on, off in spans:
                grid[speaker] |= (mids >= on) & (mids < off)
        return grid


def scenario(duration: float, agent=(), user=()) -> VaScenario:
    return VaScenario(
        duration=duration,
        intervals=(tuple(tuple(i) for i in agent), tuple(tuple(i) for i in user)),
    )


def oracle_distributions(s: VaScenario, cfg: CodecConfig = DEFAULT_CONFIG) -> FrameDistTrace:
    """One-hot encode the true upcoming window at every frame.

    Frame n stands for time t = n / frame_rate and looks at the window
    (t, t + horizon]; the final horizon's worth of frames is dropped rather
    than padded.
    """
    if s.duration < cfg.horizon - 1e-9:
        raise ValueError(
            f"scenario lasts {s.duration} s, shorter than the {cfg.horizon} s horizon"
        )
    grid = s.rasterize(cfg.frame_rate)
    F = cfg.horizon_frames
    n_frames = grid.shape[1] - F + 1
    probs = np.zeros((n_frames, codec.NUM_LABELS), dtype=np.float32)
    for n in range(n_frames):
        label = codec.encode_window(grid[:, n:n + F], cfg)
        probs[n, label] = 1.0
    return FrameDistTrace(frame_rate=cfg.frame_rate, probs=probs)

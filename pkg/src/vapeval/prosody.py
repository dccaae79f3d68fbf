"""Final-syllable prosody manipulation and the F0 estimator that verifies it.

Implements the three signal edits applied to the last word of the
statement (louder, longer, flatter intonation) plus a normalized
autocorrelation pitch tracker. Every edit is checked against the
module's own estimator in tests, never against internal state.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .audio import Alignment, AudioBuffer, WordSpan
from .errors import ValidationError

DEFAULT_F0_MIN = 60.0
DEFAULT_F0_MAX = 400.0
DEFAULT_WINDOW = 0.025
DEFAULT_HOP = 0.010
DEFAULT_VOICING_THRESHOLD = 0.5

# Frames quieter than this RMS are unvoiced regardless of correlation.
_RMS_FLOOR = 1e-4
# A shorter-lag peak this close to the global best wins, which keeps the
# tracker off octave-down errors on harmonic-rich signals.
_OCTAVE_RATIO = 0.90

_WSOLA_FRAME = 1024
# Splice search radius in seconds; covers one full period at the lowest
# trackable pitch so a phase-aligned offset always exists in the window.
_WSOLA_TOLERANCE = 0.02


@dataclass(frozen=True)
class F0Contour:
    """Frame-level pitch track; f0 is NaN on unvoiced frames."""

    hop: float
    times: np.ndarray
    f0: np.ndarray
    confidence: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=np.float64)
        f = np.asarray(self.f0, dtype=np.float64)
        c = np.asarray(self.confidence, dtype=np.float64)
        if not (t.shape == f.shape == c.shape) or t.ndim != 1:
            raise ValidationError("contour arrays must be 1-D and equally long")
        voiced = ~np.isnan(f)
        if np.any(f[voiced] <= 0):
            raise ValidationError("voiced f0 values must be positive")
        if np.any((c < 0) | (c > 1)):
            raise ValidationError("voicing confidence must lie in [0, 1]")
        for name, arr in (("times", t), ("f0", f), ("confidence", c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def voiced(self) -> np.ndarray:
        return ~np.isnan(self.f0)

    @property
    def voiced_f0(self) -> np.ndarray:
        return self.f0[self.voiced]

    def mean_f0(self) -> float:
        v = self.voiced_f0
        if v.size == 0:
            raise ValidationError("contour has no voiced frames")
        return float(np.mean(v))


@dataclass(frozen=True)
class ManipulationParams:
    """Edit magnitudes; pitch_target None means flatten to the span mean."""

    gain_db: float = 3.0
    stretch_factor: float = 1.5
    pitch_target: float | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.gain_db):
            raise ValidationError("gain_db must be finite")
        if self.stretch_factor < 1:
            raise ValidationError(
                f"stretch_factor must be >= 1, got {self.stretch_factor}"
            )
        if self.pitch_target is not None and self.pitch_target <= 0:
            raise ValidationError("pitch_target must be positive")


@dataclass(frozen=True)
class ManipulationResult:
    audio: AudioBuffer
    alignment: Alignment
    span: tuple[float, float]
    pitch_target: float | None
    clip_count: int


def estimate_f0(
    a: AudioBuffer,
    f0_min: float = DEFAULT_F0_MIN,
    f0_max: float = DEFAULT_F0_MAX,
    window: float = DEFAULT_WINDOW,
    hop: float = DEFAULT_HOP,
    voicing_threshold: float = DEFAULT_VOICING_THRESHOLD,
) -> F0Contour:
    """Track F0 with normalized cross-correlation over lagged windows.

    Each frame correlates the analysis window against itself shifted by
    every candidate lag; the shortest strong peak wins and is refined by
    parabolic interpolation. Quiet or weakly periodic frames come back
    unvoiced.
    """
    if a.channels != 1:
        raise ValidationError("pitch estimation expects mono audio")
    if not 0 < f0_min < f0_max:
        raise ValidationError(f"bad f0 range [{f0_min}, {f0_max}]")
    sr = a.sample_rate
    x = a.samples
    win_n = int(round(window * sr))
    hop_n = int(round(hop * sr))
    if win_n < 2 or hop_n < 1:
        raise ValidationError("window and hop must be positive durations")
    if x.shape[0] < win_n:
        raise ValidationError(
            f"audio of {x.shape[0]} samples is shorter than one "
            f"{win_n}-sample analysis window"
        )
    lag_min = max(int(sr / f0_max), 1)
    lag_max = int(math.ceil(sr / f0_min))
    if x.shape[0] < win_n + lag_max:
        raise ValidationError(
            "audio too short to search lags down to "
            f"{f0_min} Hz (needs {win_n + lag_max} samples)"
        )

    csq = np.concatenate([[0.0], np.cumsum(x * x)])
    starts = range(0, x.shape[0] - win_n - lag_max + 1, hop_n)
    times, f0s, confs = [], [], []
    for s in starts:
        times.append((s + win_n / 2) / sr)
        seg = x[s : s + win_n]
        e0 = csq[s + win_n] - csq[s]
        if math.sqrt(max(e0, 0.0) / win_n) < _RMS_FLOOR:
            f0s.append(np.nan)
            confs.append(0.0)
            continue
        cc = np.correlate(x[s : s + win_n + lag_max], seg, "valid")
        idx = s + np.arange(lag_max + 1)
        elag = csq[idx + win_n] - csq[idx]
        nccf = cc / np.sqrt(np.maximum(e0 * elag, 1e-20))
        lag, peak = _pick_lag(nccf, lag_min, lag_max)
        if peak < voicing_threshold:
            f0s.append(np.nan)
        else:
            f0s.append(min(max(sr / lag, f0_min), f0_max))
        confs.append(min(max(peak, 0.0), 1.0))
    return F0Contour(
        hop=hop_n / sr,
        times=np.array(times),
        f0=np.array(f0s),
        confidence=np.array(confs),
    )


def _pick_lag(nccf: np.ndarray, lag_min: int, lag_max: int) -> tuple[float, float]:
    """Choose the winning lag (parabolically refined) and its peak value."""
    search = nccf[lag_min : lag_max + 1]
    best = float(search.max())
    is_peak = (search >= np.roll(nccf, 1)[lag_min : lag_max + 1]) & (
        search >= np.roll(nccf, -1)[lag_min : lag_max + 1]
    )
    strong = np.flatnonzero(is_peak & (search >= _OCTAVE_RATIO * best))
    pos = int(strong[0]) if strong.size else int(np.argmax(search))
    lag = lag_min + pos
    refined = float(lag)
    if 0 < lag < nccf.shape[0] - 1:
        y1, y2, y3 = nccf[lag - 1], nccf[lag], nccf[lag + 1]
        denom = y1 - 2 * y2 + y3
        if abs(denom) > 1e-12:
            refined = lag + min(max((y1 - y3) / (2 * denom), -0.5), 0.5)
    return refined, best


def _wsola(
    x: np.ndarray, n_out: int, sample_rate: int, frame: int = _WSOLA_FRAME
) -> np.ndarray:
    """Resize x to n_out samples by waveform-similarity overlap-add.

    Copies windowed source frames verbatim. Each new frame is slid within
    a small search radius so that its overlap region lines up, by
    cross-correlation, with the natural continuation of the previous
    frame; splices land phase-aligned and periodicity (pitch) survives
    the length change. The reference is exactly hop samples long, which
    always fits inside the source because prev + frame <= n_in.
    """
    n_in = x.shape[0]
    if n_out == n_in:
        return x.copy()
    if n_out <= 0:
        raise ValidationError("requested output length must be positive")
    frame = min(frame, n_in - n_in % 2)
    if frame < 32:
        raise ValidationError(f"segment of {n_in} samples is too short to resize")
    hop = frame // 2
    tol = min(hop, int(round(_WSOLA_TOLERANCE * sample_rate)))
    w = 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(frame) / frame))

    out = np.zeros(n_out + frame)
    wsum = np.zeros(n_out + frame)
    span_in = max(n_in - frame, 1)
    span_out = max(n_out - frame, 1)
    prev = 0
    q = 0
    while q < n_out:
        nominal = int(round(q * span_in / span_out))
        nominal = min(max(nominal, 0), n_in - frame)
        if q == 0:
            p = nominal
        else:
            nat = x[prev + hop : prev + hop + hop]
            lo = max(nominal - tol, 0)
            hi = min(nominal + tol, n_in - frame)
            cc = np.correlate(x[lo : hi + hop], nat, "valid")
            p = lo + int(np.argmax(cc))
        out[q : q + frame] += w * x[p : p + frame]
        wsum[q : q + frame] += w
        prev = p
        q += hop
    scale = np.where(wsum > 1e-8, wsum, 1.0)
    return (out / scale)[:n_out]


def _span_samples(a: AudioBuffer, span: tuple[float, float]) -> tuple[int, int]:
    t0, t1 = span
    if not 0 <= t0 < t1 <= a.duration + 1e-9:
        raise ValidationError(
            f"span [{t0}, {t1}] falls outside audio of {a.duration:.3f}s"
        )
    return a.sample_index(t0), min(a.sample_index(t1), a.n_samples)


def stretch(a: AudioBuffer, span: tuple[float, float], factor: float) -> AudioBuffer:
    """Lengthen the span by factor while preserving its pitch."""
    if a.channels != 1:
        raise ValidationError("stretch expects mono audio")
    if factor < 1:
        raise ValidationError(f"stretch factor must be >= 1, got {factor}")
    s0, s1 = _span_samples(a, span)
    if factor == 1:
        return AudioBuffer(a.samples.copy(), a.sample_rate)
    n_out = int(round((s1 - s0) * factor))
    resized = _wsola(a.samples[s0:s1], n_out, a.sample_rate)
    out = np.concatenate([a.samples[:s0], resized, a.samples[s1:]])
    return AudioBuffer(out, a.sample_rate)


def _voiced_runs(voiced: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of voiced frames as inclusive (first, last) indices."""
    runs = []
    start = None
    for i, v in enumerate(voiced):
        if v and start is None:
            start = i
        elif not v and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, voiced.shape[0] - 1))
    return runs


def _interp_f0(positions: np.ndarray, centers: np.ndarray, values: np.ndarray):
    """Piecewise-linear f0 with linear extrapolation past the end frames.

    Extrapolation (rather than edge-hold) keeps the warp exact on signals
    whose pitch keeps moving right up to the span boundary.
    """
    f = np.interp(positions, centers, values)
    if centers.shape[0] >= 2:
        left = positions < centers[0]
        if left.any():
            slope = (values[1] - values[0]) / (centers[1] - centers[0])
            f[left] = values[0] + slope * (positions[left] - centers[0])
        right = positions > centers[-1]
        if right.any():
            slope = (values[-1] - values[-2]) / (centers[-1] - centers[-2])
            f[right] = values[-1] + slope * (positions[right] - centers[-1])
    return np.clip(f, 1.0, None)


def flatten_pitch(
    a: AudioBuffer,
    span: tuple[float, float],
    target: float,
    f0_min: float = DEFAULT_F0_MIN,
    f0_max: float = DEFAULT_F0_MAX,
) -> AudioBuffer:
    """Re-render voiced audio inside span at a constant pitch.

    Each voiced run is warped with a time-varying resample whose local
    ratio is target / f0(t), which moves every instant to the target
    pitch, then brought back to its original length with the same
    similarity overlap-add used for stretching. Unvoiced samples and
    audio outside the span are untouched, so total duration is
    preserved exactly.
    """
    if a.channels != 1:
        raise ValidationError("pitch flattening expects mono audio")
    if not f0_min <= target <= f0_max:
        raise ValidationError(
            f"target {target} Hz outside estimator range [{f0_min}, {f0_max}]"
        )
    s0, s1 = _span_samples(a, span)
    seg = a.samples[s0:s1]
    sr = a.sample_rate

    try:
        contour = estimate_f0(AudioBuffer(seg, sr), f0_min=f0_min, f0_max=f0_max)
    except ValidationError:
        warnings.warn("span too short to analyze, pitch left unchanged")
        return AudioBuffer(a.samples.copy(), sr)
    if not contour.voiced.any():
        warnings.warn("span is fully unvoiced, pitch left unchanged")
        return AudioBuffer(a.samples.copy(), sr)

    hop_n = int(round(contour.hop * sr))
    centers = contour.times * sr
    out = a.samples.copy()
    n_frames = len(contour)
    for first, last in _voiced_runs(contour.voiced):
        r0 = first * hop_n
        r1 = seg.shape[0] if last == n_frames - 1 else min((last + 1) * hop_n, seg.shape[0])
        run = seg[r0:r1]
        if run.shape[0] < 2:
            continue
        f_run = _interp_f0(
            np.arange(run.shape[0], dtype=np.float64) + r0,
            centers[first : last + 1],
            contour.f0[first : last + 1],
        )
        # Cumulative phase lets the warp be inverted exactly: sample u of
        # the warped signal sits where the source has accrued u cycles of
        # the target frequency.
        phase = np.concatenate([[0.0], np.cumsum(f_run[:-1])]) / sr
        n_warp = int(phase[-1] / (target / sr)) + 1
        tau = np.interp(
            np.arange(n_warp) * (target / sr), phase, np.arange(run.shape[0])
        )
        warped = CubicSpline(np.arange(run.shape[0]), run)(tau)
        restored = (
            _wsola(warped, run.shape[0], sr) if n_warp != run.shape[0] else warped
        )
        out[s0 + r0 : s0 + r1] = np.clip(restored, -1.0, 1.0)
    return AudioBuffer(out, sr)


def apply_gain(
    a: AudioBuffer, span: tuple[float, float], gain_db: float
) -> tuple[AudioBuffer, int]:
    """Scale the span by gain_db; returns the result and a clip count."""
    if not math.isfinite(gain_db):
        raise ValidationError("gain_db must be finite")
    s0, s1 = _span_samples(a, span)
    if gain_db == 0:
        return AudioBuffer(a.samples.copy(), a.sample_rate), 0
    out = a.samples.copy()
    scaled = out[s0:s1] * 10.0 ** (gain_db / 20.0)
    clipped = int(np.count_nonzero(np.abs(scaled) > 1.0))
    out[s0:s1] = np.clip(scaled, -1.0, 1.0)
    return AudioBuffer(out, a.sample_rate), clipped


def manipulate_final_syllable(
    a: AudioBuffer, al: Alignment, params: ManipulationParams | None = None
) -> ManipulationResult:
    """Stretch, flatten, and amplify the last word of the statement.

    The extraction filters guarantee that word is a single syllable.
    Alignment timestamps at or after the span end shift by the stretch
    delta; the edited word keeps its onset and gains the new offset.
    """
    params = params or ManipulationParams()
    words = al.statement_words
    if not words:
        raise ValidationError("alignment has no statement words to manipulate")
    last = words[-1]
    if last.offset <= last.onset:
        raise ValidationError(f"last statement word {last.word!r} has an empty span")

    sr = a.sample_rate
    s0, s1 = _span_samples(a, (last.onset, last.offset))
    n_new = int(round((s1 - s0) * params.stretch_factor))
    delta = (n_new - (s1 - s0)) / sr
    new_span = (s0 / sr, (s0 + n_new) / sr)

    stretched = stretch(a, (last.onset, last.offset), params.stretch_factor)
    shifted = _shift_after(al, last, last.offset, delta, new_span[1])

    target = params.pitch_target
    if target is None:
        contour = estimate_f0(
            AudioBuffer(
                stretched.samples[s0 : s0 + n_new], sr
            )
        )
        target = contour.mean_f0() if contour.voiced.any() else None
    if target is None:
        warnings.warn("manipulated span is unvoiced, flatten skipped")
        flattened = stretched
    else:
        flattened = flatten_pitch(stretched, new_span, target)

    final, clips = apply_gain(flattened, new_span, params.gain_db)
    return ManipulationResult(
        audio=final,
        alignment=shifted,
        span=new_span,
        pitch_target=target,
        clip_count=clips,
    )


def _shift_after(
    al: Alignment, edited: WordSpan, span_end: float, delta: float, new_end: float
) -> Alignment:
    words = []
    for w in al.words:
        if w is edited:
            words.append(WordSpan(w.word, w.onset, new_end))
        elif w.onset >= span_end - 1e-9:
            words.append(WordSpan(w.word, w.onset + delta, w.offset + delta))
        else:
            words.append(w)

    def move(t: float) -> float:
        return t + delta if t >= span_end - 1e-9 else t

    return Alignment(
        words=tuple(words),
        statement_end=move(al.statement_end),
        question_start=move(al.question_start),
        question_end=move(al.question_end),
    )

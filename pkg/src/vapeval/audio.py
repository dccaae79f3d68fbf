"""Audio and forced-alignment handling.

Loads mono WAV takes plus their word alignments, normalizes the
inter-sentence pause and the trailing tail to fixed durations of digital
silence, and assembles the two-channel layout the predictor consumes
(agent on channel 0, silent interlocutor on channel 1).
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, replace

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import InputError, ValidationError

DEFAULT_SAMPLE_RATE = 16000
DEFAULT_PAUSE = 0.4
DEFAULT_TAIL = 0.4

# Alignment may disagree with the audio length by this much before we
# refuse to edit the take.
ALIGNMENT_TOLERANCE = 0.05

_MARKER_KEYS = ("statement_end", "question_start", "question_end")


@dataclass(frozen=True)
class AudioBuffer:
    """Immutable audio: mono shape (n,) or two-channel shape (2, n)."""

    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim == 1:
            pass
        elif arr.ndim == 2 and arr.shape[0] in (1, 2):
            if arr.shape[0] == 1:
                arr = arr[0]
        else:
            raise ValidationError(
                f"audio must be (n,) or (channels, n) with 1 or 2 channels, "
                f"got shape {arr.shape}"
            )
        if arr.shape[-1] == 0:
            raise ValidationError("audio buffer is empty")
        if self.sample_rate <= 0:
            raise ValidationError(f"sample rate must be positive, got {self.sample_rate}")
        arr = np.clip(arr, -1.0, 1.0)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def channels(self) -> int:
        return 1 if self.samples.ndim == 1 else self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[-1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    def sample_index(self, t: float) -> int:
        return int(round(t * self.sample_rate))


@dataclass(frozen=True)
class WordSpan:
    word: str
    onset: float
    offset: float

    def __post_init__(self) -> None:
        if not self.word:
            raise ValidationError("alignment entry has an empty word")
        if not (math.isfinite(self.onset) and math.isfinite(self.offset)):
            raise ValidationError(f"non-finite timestamps on word {self.word!r}")
        if self.onset < 0:
            raise ValidationError(f"negative onset on word {self.word!r}")
        if self.offset < self.onset:
            raise ValidationError(
                f"word {self.word!r} ends at {self.offset} before its onset {self.onset}"
            )


@dataclass(frozen=True)
class Alignment:
    """Word timing plus the three sentence markers.

    statement_end is the offset of the last statement word, question_start
    the onset of the first question word, and question_end the offset of
    the final word.
    """

    words: tuple[WordSpan, ...]
    statement_end: float
    question_start: float
    question_end: float

    def __post_init__(self) -> None:
        if not self.words:
            raise ValidationError("alignment has no words")
        prev = 0.0
        prev_word = None
        for w in self.words:
            if w.onset < prev:
                raise ValidationError(
                    f"word {w.word!r} starts at {w.onset} before "
                    f"{prev_word!r} ends at {prev}"
                )
            prev = w.offset
            prev_word = w.word
        if not 0 < self.statement_end <= self.question_start <= self.question_end:
            raise ValidationError(
                "markers out of order: statement_end="
                f"{self.statement_end} question_start={self.question_start} "
                f"question_end={self.question_end}"
            )
        if self.question_end < self.words[-1].offset - 1e-9:
            raise ValidationError(
                f"question_end {self.question_end} precedes the last word "
                f"offset {self.words[-1].offset}"
            )

    @property
    def statement_words(self) -> tuple[WordSpan, ...]:
        return tuple(w for w in self.words if w.offset <= self.statement_end + 1e-9)

    @property
    def question_words(self) -> tuple[WordSpan, ...]:
        return tuple(w for w in self.words if w.onset >= self.question_start - 1e-9)


def alignment_to_dict(al: Alignment) -> dict:
    return {
        "words": [{"w": w.word, "on": w.onset, "off": w.offset} for w in al.words],
        "statement_end": al.statement_end,
        "question_start": al.question_start,
        "question_end": al.question_end,
    }


def alignment_from_dict(data: dict) -> Alignment:
    if not isinstance(data, dict):
        raise ValidationError("alignment document must be a JSON object")
    for key in _MARKER_KEYS:
        if key not in data:
            raise ValidationError(f"alignment is missing marker {key!r}")
        if not isinstance(data[key], (int, float)) or isinstance(data[key], bool):
            raise ValidationError(f"marker {key!r} must be a number")
    raw_words = data.get("words")
    if not isinstance(raw_words, list) or not raw_words:
        raise ValidationError("alignment must list at least one word")
    words = []
    for i, entry in enumerate(raw_words):
        if not isinstance(entry, dict) or not {"w", "on", "off"} <= set(entry):
            raise ValidationError(f"word entry {i} must have keys w, on, off")
        words.append(WordSpan(str(entry["w"]), float(entry["on"]), float(entry["off"])))
    return Alignment(
        words=tuple(words),
        statement_end=float(data["statement_end"]),
        question_start=float(data["question_start"]),
        question_end=float(data["question_end"]),
    )


def parse_alignment(path) -> Alignment:
    """Read and validate an alignment JSON file."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read alignment {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc
    try:
        return alignment_from_dict(data)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def write_alignment(path, al: Alignment) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(alignment_to_dict(al), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_wav(path, target_rate: int = DEFAULT_SAMPLE_RATE) -> AudioBuffer:
    """Load a WAV file, resampling to target_rate when needed."""
    try:
        rate, data = wavfile.read(path)
    except OSError as exc:
        raise InputError(f"cannot read WAV {path}: {exc}") from exc
    except ValueError as exc:
        raise InputError(f"{path} is not a readable WAV file: {exc}") from exc
    if data.size == 0:
        raise InputError(f"{path} contains no samples")
    if data.dtype == np.int16:
        x = data / 32768.0
    elif data.dtype == np.int32:
        x = data / 2147483648.0
    elif data.dtype == np.uint8:
        x = (data.astype(np.float64) - 128.0) / 128.0
    else:
        x = data.astype(np.float64)
    if x.ndim == 2:
        x = x.T
    if rate != target_rate:
        g = math.gcd(int(rate), int(target_rate))
        x = resample_poly(x, target_rate // g, rate // g, axis=-1)
    return AudioBuffer(x, target_rate)


def save_wav(path, buf: AudioBuffer) -> None:
    """Write 16-bit PCM WAV; two-channel buffers become stereo files."""
    pcm = np.clip(np.rint(buf.samples * 32767.0), -32768, 32767).astype(np.int16)
    if pcm.ndim == 2:
        pcm = pcm.T
    wavfile.write(path, buf.sample_rate, pcm)


def _shift_words(words, question_start, delta):
    out = []
    for w in words:
        if w.onset >= question_start - 1e-9:
            out.append(replace(w, onset=w.onset + delta, offset=w.offset + delta))
        else:
            out.append(w)
    return tuple(out)


def normalize_silences(
    a: AudioBuffer,
    al: Alignment,
    pause: float = DEFAULT_PAUSE,
    tail: float = DEFAULT_TAIL,
    keep_gap_audio: bool = False,
) -> tuple[AudioBuffer, Alignment]:
    """Force the inter-sentence gap and the trailing tail to fixed lengths.

    The gap between statement_end and question_start is replaced by exactly
    ``pause`` seconds of digital silence and everything after question_end
    by exactly ``tail`` seconds of silence; question timestamps shift to
    match. Speech samples outside the edited spans are copied bit for bit,
    so the operation is idempotent. With keep_gap_audio the original gap
    recording is center-cropped or zero-padded at the edges instead of
    being silenced, for studying breath and room-tone effects.
    """
    if a.channels != 1:
        raise ValidationError("silence normalization expects mono agent audio")
    if pause <= 0 or tail <= 0:
        raise ValidationError("pause and tail durations must be positive")
    if al.question_end > a.duration + ALIGNMENT_TOLERANCE:
        raise ValidationError(
            f"alignment ends at {al.question_end:.3f}s but audio lasts "
            f"{a.duration:.3f}s"
        )

    sr = a.sample_rate
    gap_start = a.sample_index(al.statement_end)
    q_start = a.sample_index(al.question_start)
    q_end = min(a.sample_index(al.question_end), a.n_samples)
    pause_n = int(round(pause * sr))
    tail_n = int(round(tail * sr))
    if not 0 < gap_start <= q_start <= q_end:
        raise ValidationError("alignment markers fall outside the audio")

    if keep_gap_audio:
        gap = _fit_span(a.samples[gap_start:q_start], pause_n)
    else:
        gap = np.zeros(pause_n)
    out = np.concatenate(
        [
            a.samples[:gap_start],
            gap,
            a.samples[q_start:q_end],
            np.zeros(tail_n),
        ]
    )

    # Marker times are placed exactly on sample boundaries so a second
    # pass recomputes the same indices.
    new_q_start = (gap_start + pause_n) / sr
    new_q_end = (gap_start + pause_n + (q_end - q_start)) / sr
    delta = new_q_start - al.question_start
    shifted = Alignment(
        words=_shift_words(al.words, al.question_start, delta),
        statement_end=al.statement_end,
        question_start=new_q_start,
        question_end=new_q_end,
    )
    return AudioBuffer(out, sr), shifted


def _fit_span(span: np.ndarray, target_n: int) -> np.ndarray:
    """Center-crop or edge-pad a gap recording to exactly target_n samples."""
    n = span.shape[0]
    if n == target_n:
        return span
    if n > target_n:
        start = (n - target_n) // 2
        return span[start : start + target_n]
    left = (target_n - n) // 2
    return np.concatenate([np.zeros(left), span, np.zeros(target_n - n - left)])


def assemble_stereo(agent: AudioBuffer) -> AudioBuffer:
    """Put the agent on channel 0 against an all-silent channel 1."""
    if agent.channels != 1:
        raise ValidationError("expected mono agent audio, got 2 channels")
    return AudioBuffer(
        np.stack([agent.samples, np.zeros(agent.n_samples)]), agent.sample_rate
    )


_TG_INTERVAL = re.compile(
    r"xmin\s*=\s*([0-9.eE+-]+)\s*\n\s*xmax\s*=\s*([0-9.eE+-]+)\s*\n\s*text\s*=\s*\"((?:[^\"]|\"\")*)\""
)
_TG_TIER = re.compile(r"class\s*=\s*\"IntervalTier\"\s*\n\s*name\s*=\s*\"([^\"]*)\"")


def textgrid_to_alignment(path, statement: str, question: str) -> Alignment:
    """Convert an aligner's interval-tier file to an alignment.

    Reads the word tier (named "words", else the first interval tier),
    drops empty intervals, and derives the three markers by splitting the
    word list after len(statement.split()) entries.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read TextGrid {path}: {exc}") from exc

    tiers = _split_tiers(text)
    if not tiers:
        raise ValidationError(f"{path} contains no interval tiers")
    tier = tiers.get("words") or next(iter(tiers.values()))
    words = [
        WordSpan(label, on, off)
        for on, off, label in tier
        if label.strip() and label.strip() not in ("sil", "sp", "<p:>")
    ]
    if not words:
        raise ValidationError(f"{path} has no labeled word intervals")

    n_statement = len(statement.split())
    n_question = len(question.split())
    if len(words) != n_statement + n_question:
        raise ValidationError(
            f"{path} aligns {len(words)} words but the pair has "
            f"{n_statement + n_question}"
        )
    return Alignment(
        words=tuple(words),
        statement_end=words[n_statement - 1].offset,
        question_start=words[n_statement].onset,
        question_end=words[-1].offset,
    )


def _split_tiers(text: str) -> dict[str, list[tuple[float, float, str]]]:
    tiers: dict[str, list[tuple[float, float, str]]] = {}
    matches = list(_TG_TIER.finditer(text))
    for i, m in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        body = text[m.end() : end]
        intervals = [
            (float(iv.group(1)), float(iv.group(2)), iv.group(3).replace('""', '"'))
            for iv in _TG_INTERVAL.finditer(body)
        ]
        tiers[m.group(1)] = intervals
    return tiers

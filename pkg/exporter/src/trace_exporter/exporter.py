"""Run a scripted voice-activity-projection checkpoint over stereo WAV files.

For every input this writes the 256-label binary trace the evaluation
pipeline consumes, a text sidecar with the exporter's own per-frame
p_now/p_fut, and a JSON manifest with checksums. The sidecar exists so the
consumer can recompute the marginals from the trace bytes and compare:
the two sides share file formats, never code.

Checkpoint contract: a TorchScript module with a float ``frame_rate``
attribute whose forward maps a (1, 2, T) float32 waveform to (1, N, 256)
logits.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from scipy.io import wavfile

TRACE_MAGIC = b"VAPT"
TRACE_VERSION = 1
_HEADER = struct.Struct("<4sBfI")

NUM_LABELS = 256
SAMPLE_RATE = 16000
BIN_DURATIONS = (0.2, 0.4, 0.6, 0.8)
WEIGHTINGS = ("duration", "uniform")


class ExportError(Exception):
    """An input file or the checkpoint cannot be used."""


@dataclass(frozen=True)
class ExportManifest:
    """What was exported: checkpoint identity, frame rate, per-file records."""

    checkpoint: str
    checkpoint_sha256: str
    frame_rate: float
    weighting: str
    files: tuple[dict, ...]

    def to_json(self) -> str:
        doc = {
            "checkpoint": self.checkpoint,
            "checkpoint_sha256": self.checkpoint_sha256,
            "frame_rate": self.frame_rate,
            "weighting": self.weighting,
            "files": list(self.files),
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_checkpoint(path) -> torch.jit.ScriptModule:
    path = Path(path)
    if not path.is_file():
        raise ExportError(f"checkpoint {path} does not exist")
    try:
        model = torch.jit.load(str(path), map_location="cpu")
    except (RuntimeError, ValueError) as exc:
        raise ExportError(f"cannot load checkpoint {path}: {exc}") from exc
    if not hasattr(model, "frame_rate"):
        raise ExportError(f"checkpoint {path} does not declare a frame_rate")
    model.eval()
    return model


def read_stereo(path) -> np.ndarray:
    """Load a stereo 16 kHz WAV as a (2, T) float32 array in [-1, 1]."""
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except OSError as exc:
        raise ExportError(f"cannot read WAV {path}: {exc}") from exc
    except ValueError as exc:
        raise ExportError(f"{path} is not a readable WAV file: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != 2:
        channels = 1 if data.ndim == 1 else data.shape[1]
        raise ExportError(f"{path}: expected stereo audio, got {channels} channel(s)")
    if rate != SAMPLE_RATE:
        raise ExportError(f"{path}: expected {SAMPLE_RATE} Hz audio, got {rate} Hz")
    if data.dtype == np.int16:
        x = data / 32768.0
    elif data.dtype == np.int32:
        x = data / 2147483648.0
    else:
        x = data.astype(np.float64)
    return np.ascontiguousarray(x.T, dtype=np.float32)


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _bit(label: int, speaker: int, bin_index: int) -> int:
    return (label >> (7 - (4 * speaker + bin_index))) & 1


def _region_tables(weighting: str) -> np.ndarray:
    """Per-label weight mass: rows agent_now, user_now, agent_fut, user_fut."""
    if weighting not in WEIGHTINGS:
        raise ExportError(f"unknown weighting {weighting!r}, expected one of {WEIGHTINGS}")
    w = BIN_DURATIONS if weighting == "duration" else (1.0, 1.0, 1.0, 1.0)
    tables = np.zeros((4, NUM_LABELS))
    for label in range(NUM_LABELS):
        for speaker in (0, 1):
            for b in range(4):
                if _bit(label, speaker, b):
                    tables[2 * (b // 2) + speaker, label] += w[b]
    return tables


def marginals(probs: np.ndarray, weighting: str = "duration"):
    """p_now and p_fut per frame; frames with no voiced mass sit at 0.5."""
    mass = probs.astype(np.float64) @ _region_tables(weighting).T

    def ratio(agent, user):
        total = agent + user
        out = np.full(total.shape, 0.5)
        voiced = total > 0
        out[voiced] = agent[voiced] / total[voiced]
        return out

    return ratio(mass[:, 0], mass[:, 1]), ratio(mass[:, 2], mass[:, 3])


def _write_trace(path: Path, frame_rate: float, probs: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(TRACE_MAGIC, TRACE_VERSION, frame_rate, len(probs)))
        fh.write(probs.astype("<f4", copy=False).tobytes())


def _write_sidecar(path: Path, frame_rate: float, p_now, p_fut) -> None:
    lines = [f"frame_rate={float(frame_rate)!r}"]
    lines += [f"{float(n)!r},{float(f)!r}" for n, f in zip(p_now, p_fut)]
    path.write_text("\n".join(lines) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _infer(model, wave: np.ndarray, source: Path) -> np.ndarray:
    with torch.no_grad():
        try:
            logits = model(torch.from_numpy(wave[None]))
        except RuntimeError as exc:
            raise ExportError(f"{source}: model rejected the input: {exc}") from exc
    arr = logits.squeeze(0).double().numpy()
    if arr.ndim != 2 or arr.shape[1] != NUM_LABELS or arr.shape[0] == 0:
        raise ExportError(
            f"{source}: model produced shape {tuple(arr.shape)}, "
            f"expected (frames, {NUM_LABELS})"
        )
    return arr


def export(wav_paths, checkpoint, out_dir, weighting: str = "duration") -> ExportManifest:
    """Export one trace + sidecar per WAV and write manifest.json in out_dir."""
    paths = [Path(p) for p in wav_paths]
    if not paths:
        raise ExportError("no input files given")
    stems = [p.stem for p in paths]
    if len(set(stems)) != len(stems):
        raise ExportError("input files must have distinct names")
    _region_tables(weighting)  # reject bad weighting before any work
    model = load_checkpoint(checkpoint)
    frame_rate = float(model.frame_rate)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    files = []
    for wav in paths:
        wave = read_stereo(wav)
        probs = _softmax_rows(_infer(model, wave, wav)).astype(np.float32)
        trace_path = out / f"{wav.stem}.vapt"
        sidecar_path = out / f"{wav.stem}.ptrace"
        _write_trace(trace_path, frame_rate, probs)
        p_now, p_fut = marginals(probs, weighting)
        _write_sidecar(sidecar_path, frame_rate, p_now, p_fut)
        files.append(
            {
                "input": str(wav),
                "trace": str(trace_path),
                "sidecar": str(sidecar_path),
                "sha256": _sha256(trace_path),
                "frames": int(len(probs)),
                "argmax_labels": np.argmax(probs, axis=1).tolist(),
            }
        )

    manifest = ExportManifest(
        checkpoint=Path(checkpoint).name,
        checkpoint_sha256=_sha256(Path(checkpoint)),
        frame_rate=frame_rate,
        weighting=weighting,
        files=tuple(files),
    )
    (out / "manifest.json").write_text(manifest.to_json())
    return manifest

import json
from pathlib import Path

import numpy as np
import pytest

from vapeval import AudioBuffer

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def corpus_dialogs() -> dict:
    return json.loads((FIXTURES / "corpus_20.json").read_text())


def tone(duration: float, freq: float, sample_rate: int = 16000,
         amplitude: float = 0.25) -> np.ndarray:
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    return amplitude * np.sin(2 * np.pi * freq * t)


def speech_like(spans, duration: float, sample_rate: int = 16000,
                amplitude: float = 0.25) -> AudioBuffer:
    """Tone bursts at the given (onset, offset, freq) spans, silence elsewhere."""
    n = int(round(duration * sample_rate))
    x = np.zeros(n)
    t = np.arange(n) / sample_rate
    for on, off, freq in spans:
        seg = (t >= on) & (t < off)
        x[seg] = amplitude * np.sin(2 * np.pi * freq * t[seg])
    return AudioBuffer(x, sample_rate)


@pytest.fixture
def make_speech():
    return speech_like

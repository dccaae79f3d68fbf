import numpy as np
import pytest
import torch
from scipy.io import wavfile

SR = 16000


class TinyVap(torch.nn.Module):
    """320-sample stride conv head: (1, 2, T) -> (1, T//320, 256) at 50 Hz."""

    frame_rate: float

    def __init__(self):
        super().__init__()
        self.frame_rate = 50.0
        self.encode = torch.nn.Conv1d(2, 64, kernel_size=320, stride=320)
        self.head = torch.nn.Conv1d(64, 256, kernel_size=1)

    def forward(self, wave: torch.Tensor) -> torch.Tensor:
        return self.head(torch.tanh(self.encode(wave))).transpose(1, 2)


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory):
    torch.manual_seed(7)
    model = TinyVap().eval()
    path = tmp_path_factory.mktemp("model") / "vap50.pt"
    torch.jit.script(model).save(str(path))
    return path


def write_stereo(path, left, right, rate=SR):
    pcm = np.stack([left, right], axis=1)
    wavfile.write(path, rate, np.clip(pcm * 32767, -32768, 32767).astype(np.int16))


@pytest.fixture(scope="session")
def wav_dir(tmp_path_factory):
    """Six 1 s stereo takes covering tones, noise, silence, and a chirp."""
    out = tmp_path_factory.mktemp("wavs")
    t = np.arange(SR) / SR
    rng = np.random.default_rng(5)
    tone = 0.3 * np.sin(2 * np.pi * 220 * t)
    write_stereo(out / "agent_tone.wav", tone, np.zeros(SR))
    write_stereo(out / "user_tone.wav", np.zeros(SR), tone)
    write_stereo(out / "duet.wav", tone, 0.3 * np.sin(2 * np.pi * 150 * t))
    write_stereo(out / "noise.wav", 0.1 * rng.standard_normal(SR),
                 0.1 * rng.standard_normal(SR))
    write_stereo(out / "silence.wav", np.zeros(SR), np.zeros(SR))
    write_stereo(out / "chirp.wav",
                 0.3 * np.sin(2 * np.pi * (100 * t + 80 * t * t)), np.zeros(SR))
    return out


@pytest.fixture(scope="session")
def wav_paths(wav_dir):
    return sorted(wav_dir.glob("*.wav"))

import numpy as np
import pytest

from strev.audio_io import Waveform

SR = 16000


def tone(freq, seconds=1.0, sr=SR, amp=0.3, harmonics=1):
    t = np.arange(int(seconds * sr)) / sr
    x = np.zeros_like(t)
    for k in range(1, harmonics + 1):
        x += (amp / k) * np.sin(2 * np.pi * k * freq * t)
    return Waveform(x, sr, id=f"tone{freq}")


def glide(f_start, f_end, seconds=2.0, sr=SR, amp=0.3):
    n = int(seconds * sr)
    f0 = np.linspace(f_start, f_end, n)
    phase = 2 * np.pi * np.cumsum(f0) / sr
    return Waveform(amp * np.sin(phase) + 0.5 * amp * np.sin(2 * phase), sr, id="glide")


def vowel(f0=140.0, seconds=2.0, sr=SR):
    """Harmonic-rich stationary signal with formant-like shaping."""
    n = int(seconds * sr)
    t = np.arange(n) / sr
    x = np.zeros(n)
    for k in range(1, 25):
        f = k * f0
        if f > 0.45 * sr:
            break
        shape = np.exp(-(((f - 700) / 600) ** 2)) + 0.6 * np.exp(
            -(((f - 1800) / 700) ** 2)
        )
        x += (shape / k) * np.sin(2 * np.pi * f * t)
    return Waveform(0.4 * x / np.abs(x).max(), sr, id="vowel")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

import struct

import numpy as np
import pytest

from strev.audio_io import (
    UnsupportedWavError,
    Waveform,
    WavFormatError,
    read_wav,
    resample,
    write_wav,
)
from strev.spectral import stft


def _raw_wav(path, fmt_code, channels, bits, payload, rate=16000):
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH", 16, fmt_code, channels, rate,
        rate * channels * bits // 8, channels * bits // 8, bits,
    )
    header += b"data" + struct.pack("<I", len(payload))
    path.write_bytes(header + payload)


def test_pcm16_scaling(tmp_path):
    p = tmp_path / "a.wav"
    _raw_wav(p, 1, 1, 16, np.array([0, 16384], dtype="<i2").tobytes())
    w = read_wav(p)
    assert w.samples == pytest.approx([0.0, 0.5], abs=1e-4)


def test_stereo_channel_mean(tmp_path):
    p = tmp_path / "st.wav"
    left = np.full(10, 32767, dtype="<i2")
    right = np.zeros(10, dtype="<i2")
    inter = np.empty(20, dtype="<i2")
    inter[0::2] = left
    inter[1::2] = right
    _raw_wav(p, 1, 2, 16, inter.tobytes())
    w = read_wav(p)
    assert np.allclose(w.samples, 0.5, atol=1e-4)


def test_float32_read(tmp_path):
    p = tmp_path / "f.wav"
    data = np.array([0.25, -0.75], dtype="<f4")
    _raw_wav(p, 3, 1, 32, data.tobytes())
    w = read_wav(p)
    assert w.samples == pytest.approx([0.25, -0.75])


def test_roundtrip_within_quantization(tmp_path, rng):
    x = rng.uniform(-1, 1, 5000)
    w = Waveform(x, 16000)
    write_wav(w, tmp_path / "r.wav")
    back = read_wav(tmp_path / "r.wav")
    assert np.abs(back.samples - x).max() <= 2**-15 + 1e-9


def test_write_full_scale_mapping(tmp_path):
    write_wav(Waveform([0.0, 1.0, -1.0], 16000), tmp_path / "fs.wav")
    raw = (tmp_path / "fs.wav").read_bytes()
    ints = np.frombuffer(raw[44:], dtype="<i2")
    assert list(ints) == [0, 32767, -32768]


def test_write_clips_out_of_range(tmp_path):
    write_wav(Waveform([1.5], 16000), tmp_path / "c.wav")
    ints = np.frombuffer((tmp_path / "c.wav").read_bytes()[44:], dtype="<i2")
    assert ints[0] == 32767


def test_empty_waveform_rejected():
    with pytest.raises(ValueError):
        Waveform([], 16000)


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        read_wav("/nonexistent/x.wav")


def test_malformed_header(tmp_path):
    p = tmp_path / "bad.wav"
    p.write_bytes(b"NOTAWAVEFILE")
    with pytest.raises(WavFormatError):
        read_wav(p)


def test_unsupported_encoding(tmp_path):
    p = tmp_path / "u24.wav"
    _raw_wav(p, 1, 1, 24, b"\x00" * 12)
    with pytest.raises(UnsupportedWavError):
        read_wav(p)


def test_resample_24k_to_16k_length():
    w = Waveform(np.sin(np.arange(24000) * 0.1), 24000)
    out = resample(w, 16000)
    assert abs(out.samples.size - 16000) <= 1
    assert abs(out.duration - w.duration) <= 1.0 / 16000


def test_resample_identity():
    w = Waveform(np.sin(np.arange(1000) * 0.01), 16000)
    out = resample(w, 16000)
    assert np.array_equal(out.samples, w.samples)


def test_resample_preserves_tone_frequency():
    t = np.arange(24000) / 24000
    w = Waveform(0.5 * np.sin(2 * np.pi * 1000 * t), 24000)
    out = resample(w, 16000)
    spec = stft(out)
    mid = spec.magnitudes[spec.magnitudes.shape[0] // 2]
    # 1 kHz at 12.5 Hz per bin
    assert np.argmax(mid) == 80

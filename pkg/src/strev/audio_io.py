"""WAV reading/writing and sample-rate conversion.

Everything downstream assumes 16 kHz mono float samples in [-1, 1];
this module is where that normalization happens.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import firwin, resample_poly


class WavFormatError(ValueError):
    """The file is not a well-formed RIFF/WAVE container."""


class UnsupportedWavError(ValueError):
    """Well-formed WAV, but an encoding we do not handle."""


@dataclass
class Waveform:
    samples: np.ndarray  # float64 mono, amplitudes in [-1, 1]
    sample_rate: int
    id: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("waveform must be a non-empty 1-D sample sequence")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform contains non-finite samples")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be positive")
        self.sample_rate = int(self.sample_rate)

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return self.samples.size / self.sample_rate


def read_wav(path) -> Waveform:
    """Read a PCM16 or float32 WAV file as mono samples in [-1, 1].

    Stereo files are averaged down to one channel. Raises
    FileNotFoundError for a missing file, WavFormatError for a broken
    container, UnsupportedWavError for encodings outside PCM16/float32.
    """
    with open(path, "rb") as fh:
        data = fh.read()

    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise WavFormatError(f"{path}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            payload = body
        pos += 8 + chunk_size + (chunk_size & 1)

    if fmt is None or payload is None:
        raise WavFormatError(f"{path}: missing fmt or data chunk")

    audio_format, channels, rate, _, _, bits = fmt
    if channels not in (1, 2):
        raise UnsupportedWavError(f"{path}: {channels} channels (only mono/stereo)")
    if audio_format == 1 and bits == 16:
        raw = np.frombuffer(payload, dtype="<i2").astype(np.float64) / 32768.0
    elif audio_format == 3 and bits == 32:
        raw = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedWavError(
            f"{path}: format={audio_format} bits={bits} (need PCM16 or float32)"
        )

    if channels == 2:
        raw = raw.reshape(-1, 2).mean(axis=1)
    return Waveform(raw, rate, id=str(path))


def write_wav(w: Waveform, path) -> None:
    """Write mono 16-bit PCM; values are clipped to [-1, 1] first."""
    clipped = np.clip(w.samples, -1.0, 1.0)
    ints = np.clip(np.round(clipped * 32768.0), -32768, 32767).astype("<i2")
    payload = ints.tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH", 16, 1, 1, w.sample_rate, w.sample_rate * 2, 2, 16
    )
    header += b"data" + struct.pack("<I", len(payload))
    with open(path, "wb") as fh:
        fh.write(header + payload)


def resample(w: Waveform, target_rate: int) -> Waveform:
    """Band-limited rate conversion (polyphase Kaiser-windowed sinc).

    Identity when the rates already match; output duration matches the
    input within one output-sample period.
    """
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == w.sample_rate:
        return Waveform(w.samples.copy(), w.sample_rate, id=w.id)

    g = np.gcd(w.sample_rate, target_rate)
    up, down = target_rate // g, w.sample_rate // g
    # 64 taps per polyphase branch, Kaiser beta 8.6
    taps = 64 * up
    cutoff = 1.0 / max(up, down)
    h = firwin(taps, cutoff, window=("kaiser", 8.6)) * up
    out = resample_poly(w.samples, up, down, window=h)
    return Waveform(out, target_rate, id=w.id)

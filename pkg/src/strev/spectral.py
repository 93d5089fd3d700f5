"""STFT and 80-band log-mel frontend.

Defaults match the embedding frontend: 1280-point FFT, 1280 window,
320 hop at 16 kHz, symmetric Hann, centered frames with reflect
padding (so frame count is 1 + floor(N / hop)).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .audio_io import Waveform

LOG_FLOOR = 1e-5  # linear mel energy clamp before the log


@dataclass(frozen=True)
class StftConfig:
    n_fft: int = 1280
    hop: int = 320
    win_length: int = 1280
    center: bool = True

    def __post_init__(self):
        if not (0 < self.hop <= self.win_length <= self.n_fft):
            raise ValueError("need 0 < hop <= win_length <= n_fft")


@dataclass
class Spectrogram:
    magnitudes: np.ndarray  # (frames, n_fft//2 + 1), non-negative
    config: StftConfig
    sample_rate: int


@dataclass
class MelSpectrogram:
    values: np.ndarray  # (frames, n_mels), natural log scale
    sample_rate: int

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]


def _reflect_pad(x: np.ndarray, pad: int) -> np.ndarray:
    """Reflect padding that works for any pad width (periodic extension)."""
    n = x.size
    if n == 1:
        return np.full(n + 2 * pad, x[0])
    idx = np.arange(-pad, n + pad)
    period = 2 * (n - 1)
    idx = np.mod(idx, period)
    idx = np.where(idx >= n, period - idx, idx)
    return x[idx]


def stft(w: Waveform, cfg: StftConfig = StftConfig()) -> Spectrogram:
    """Magnitude STFT of a waveform."""
    x = w.samples
    window = np.hanning(cfg.win_length)  # symmetric: palindromic under reversal
    if cfg.win_length < cfg.n_fft:
        lpad = (cfg.n_fft - cfg.win_length) // 2
        window = np.pad(window, (lpad, cfg.n_fft - cfg.win_length - lpad))

    if cfg.center:
        pad = cfg.n_fft // 2
        x = _reflect_pad(x, pad)
        n_frames = 1 + w.samples.size // cfg.hop
    else:
        if x.size < cfg.n_fft:
            raise ValueError("signal shorter than one frame (center=False)")
        n_frames = 1 + (x.size - cfg.n_fft) // cfg.hop

    starts = np.arange(n_frames) * cfg.hop
    frames = x[starts[:, None] + np.arange(cfg.n_fft)[None, :]] * window
    mags = np.abs(np.fft.rfft(frames, axis=1))
    return Spectrogram(mags, cfg, w.sample_rate)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(
    sample_rate: int,
    n_fft: int = 1280,
    n_mels: int = 80,
    fmin: float = 0.0,
    fmax: float = 8000.0,
) -> np.ndarray:
    """Triangular mel filterbank, shape (n_mels, n_fft//2 + 1)."""
    if not (0 <= fmin < fmax <= sample_rate / 2):
        raise ValueError("need 0 <= fmin < fmax <= Nyquist")
    mel_pts = np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2)
    hz_pts = mel_to_hz(mel_pts)
    bin_freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft

    fb = np.zeros((n_mels, bin_freqs.size))
    for m in range(n_mels):
        lo, mid, hi = hz_pts[m], hz_pts[m + 1], hz_pts[m + 2]
        up = (bin_freqs - lo) / (mid - lo)
        down = (hi - bin_freqs) / (hi - mid)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
    return fb


def mel_center_frequencies(
    sample_rate: int, n_mels: int = 80, fmin: float = 0.0, fmax: float = 8000.0
) -> np.ndarray:
    mel_pts = np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2)
    return mel_to_hz(mel_pts)[1:-1]


def log_mel(spec: Spectrogram, fb: np.ndarray) -> MelSpectrogram:
    """Mel-project magnitudes and take the floored natural log."""
    if fb.shape[1] != spec.magnitudes.shape[1]:
        raise ValueError(
            f"filterbank has {fb.shape[1]} bins, spectrogram has "
            f"{spec.magnitudes.shape[1]}"
        )
    energies = spec.magnitudes @ fb.T
    return MelSpectrogram(np.log(np.maximum(energies, LOG_FLOOR)), spec.sample_rate)


def mel_spectrogram(
    w: Waveform, cfg: StftConfig = StftConfig(), n_mels: int = 80
) -> MelSpectrogram:
    """Waveform straight to log-mel with the default filterbank."""
    fb = mel_filterbank(w.sample_rate, cfg.n_fft, n_mels)
    return log_mel(stft(w, cfg), fb)


def save_mel_csv(mel: MelSpectrogram, path) -> None:
    """Dump a mel matrix as CSV, one frame per row (for plotting)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in mel.values:
            writer.writerow([repr(v) for v in row])

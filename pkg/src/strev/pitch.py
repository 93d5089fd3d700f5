"""Fundamental-frequency tracking via normalized autocorrelation.

Per-frame search over the 50-600 Hz lag band; the candidate lag is the
smallest local maximum within a small tolerance of the global peak
(this resolves period-multiple ties toward the fundamental), refined
by parabolic interpolation. Frames whose peak falls below the voicing
threshold are unvoiced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import Waveform

F0_MIN = 50.0
F0_MAX = 600.0
VOICING_THRESHOLD = 0.5
_ENERGY_FLOOR = 1e-10
_PEAK_TIE_TOL = 1e-2


@dataclass
class PitchContour:
    f0: np.ndarray        # Hz per frame, 0 where unvoiced
    voiced: np.ndarray    # bool per frame
    hop: int              # samples between frames
    sample_rate: int

    def __post_init__(self):
        self.f0 = np.asarray(self.f0, dtype=np.float64)
        self.voiced = np.asarray(self.voiced, dtype=bool)
        if self.f0.shape != self.voiced.shape:
            raise ValueError("f0 and voiced must have equal length")
        if np.any((self.f0 > 0) != self.voiced):
            raise ValueError("f0 must be positive exactly on voiced frames")


def _frame_f0(ext: np.ndarray, frame_len: int, min_lag: int, max_lag: int):
    """Best (f0, peak) for one frame given frame_len + max_lag samples."""
    base = ext[:frame_len]
    e0 = float(base @ base)
    if e0 < _ENERGY_FLOOR:
        return 0.0, 0.0

    lags = np.arange(min_lag, max_lag + 1)
    # lagged segments as a (n_lags, frame_len) view
    segs = ext[lags[:, None] + np.arange(frame_len)[None, :]]
    num = segs @ base
    den = np.sqrt(e0 * np.einsum("ij,ij->i", segs, segs))
    r = np.where(den > _ENERGY_FLOOR, num / np.maximum(den, _ENERGY_FLOOR), 0.0)

    best = float(r.max())
    if best <= 0.0:
        return 0.0, best
    # local maxima near the global peak; smallest such lag wins
    interior = np.zeros_like(r, dtype=bool)
    interior[1:-1] = (r[1:-1] > r[:-2]) & (r[1:-1] >= r[2:])
    interior[0] = r[0] >= r[1]
    interior[-1] = r[-1] > r[-2]
    cands = np.flatnonzero(interior & (r >= best - _PEAK_TIE_TOL))
    i = int(cands[0]) if cands.size else int(np.argmax(r))

    lag = float(lags[i])
    if 0 < i < r.size - 1:  # parabolic refinement
        denom = r[i - 1] - 2.0 * r[i] + r[i + 1]
        if abs(denom) > 1e-12:
            lag += 0.5 * (r[i - 1] - r[i + 1]) / denom
    return lag, float(r[i])


def estimate_f0(
    w: Waveform,
    frame_ms: float = 40.0,
    hop_ms: float = 20.0,
    voicing_threshold: float = VOICING_THRESHOLD,
) -> PitchContour:
    """Track F0 over [50, 600] Hz. frame_ms must cover two 50 Hz periods."""
    if frame_ms < 2000.0 / F0_MIN:
        raise ValueError(f"frame_ms must be >= {2000.0 / F0_MIN:.0f} ms")
    sr = w.sample_rate
    frame_len = int(round(frame_ms * sr / 1000.0))
    hop = int(round(hop_ms * sr / 1000.0))
    min_lag = max(2, int(round(sr / F0_MAX)))
    max_lag = int(round(sr / F0_MIN))

    span = frame_len + max_lag
    if w.samples.size < span:
        raise ValueError(
            f"signal too short for pitch analysis: need {span} samples"
        )
    n_frames = 1 + (w.samples.size - span) // hop

    f0 = np.zeros(n_frames)
    voiced = np.zeros(n_frames, dtype=bool)
    for i in range(n_frames):
        ext = w.samples[i * hop : i * hop + span]
        lag, peak = _frame_f0(ext, frame_len, min_lag, max_lag)
        if lag > 0 and peak >= voicing_threshold:
            f0[i] = float(np.clip(sr / lag, F0_MIN, F0_MAX))
            voiced[i] = True
    return PitchContour(f0, voiced, hop, sr)


def normalize_f0(p: PitchContour) -> np.ndarray:
    """Per-utterance z-score of log-F0; unvoiced frames map to 0."""
    if not p.voiced.any():
        raise ValueError("contour has no voiced frames")
    logs = np.log(p.f0[p.voiced])
    mu = logs.mean()
    sigma = logs.std()
    out = np.zeros_like(p.f0)
    if sigma > 1e-12:
        out[p.voiced] = (np.log(p.f0[p.voiced]) - mu) / sigma
    return out


def contour_correlation(a: PitchContour, b: PitchContour) -> float:
    """Pearson correlation of F0 over jointly voiced frames."""
    if a.f0.size != b.f0.size:
        raise ValueError("contours must have equal frame counts")
    joint = a.voiced & b.voiced
    if joint.sum() < 2:
        raise ValueError("need at least 2 jointly voiced frames")
    xa = a.f0[joint]
    xb = b.f0[joint]
    if xa.std() < 1e-12 or xb.std() < 1e-12:
        raise ValueError("degenerate (constant) contour")
    return float(np.corrcoef(xa, xb)[0, 1])

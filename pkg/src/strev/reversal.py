"""Time reversal of waveforms: full-utterance and short-time variants.

Full reversal flips the whole signal; short-time reversal flips
contiguous non-overlapping segments of a fixed duration in place
(the tail segment, if shorter, is flipped too). Both are sample
permutations, so length and energy are preserved exactly and applying
the same strategy twice restores the input bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .audio_io import Waveform

MODE_FULL = "full"
MODE_WINDOWED = "windowed"


@dataclass(frozen=True)
class ReversalSpec:
    mode: str
    window_ms: Optional[float] = None

    def __post_init__(self):
        if self.mode not in (MODE_FULL, MODE_WINDOWED):
            raise ValueError(f"unknown reversal mode {self.mode!r}")
        if self.mode == MODE_WINDOWED:
            if self.window_ms is None or self.window_ms <= 0:
                raise ValueError("windowed reversal needs window_ms > 0")
        elif self.window_ms is not None:
            raise ValueError("full reversal carries no window parameter")

    @classmethod
    def full(cls) -> "ReversalSpec":
        return cls(MODE_FULL)

    @classmethod
    def windowed(cls, window_ms: float) -> "ReversalSpec":
        return cls(MODE_WINDOWED, float(window_ms))

    def label(self) -> str:
        if self.mode == MODE_FULL:
            return "full"
        return f"{self.window_ms:g}ms"


def reverse_full(w: Waveform) -> Waveform:
    """Flip the signal along the time axis."""
    return Waveform(w.samples[::-1].copy(), w.sample_rate, id=w.id)


def reverse_windowed(w: Waveform, window_ms: float) -> Waveform:
    """Reverse contiguous non-overlapping segments of window_ms in place."""
    seg = int(round(window_ms * w.sample_rate / 1000.0))
    if seg < 1:
        raise ValueError(
            f"window of {window_ms} ms is shorter than one sample at "
            f"{w.sample_rate} Hz"
        )
    out = w.samples.copy()
    for start in range(0, out.size, seg):
        out[start : start + seg] = out[start : start + seg][::-1]
    return Waveform(out, w.sample_rate, id=w.id)


def apply_reversal(w: Waveform, spec: ReversalSpec) -> Waveform:
    if spec.mode == MODE_FULL:
        return reverse_full(w)
    return reverse_windowed(w, spec.window_ms)


def segment_length(spec: ReversalSpec, sample_rate: int) -> int:
    """Segment size in samples for a windowed spec (whole signal for full)."""
    if spec.mode == MODE_FULL:
        return np.iinfo(np.int64).max
    return int(round(spec.window_ms * sample_rate / 1000.0))

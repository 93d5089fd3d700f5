"""Speaker-similarity scoring and the mel reconstruction residual.

Similarity is cosine-based (higher = more similar); zero-norm
embeddings are rejected here rather than upstream. The reconstruction
residual is the mean absolute difference between a target mel and the
sum of toy source/filter projections, so the value does not scale with
matrix resolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .embedding import EMBED_DIM, SpeakerEmbedding
from .pitch import PitchContour, normalize_f0
from .spectral import MelSpectrogram

N_MELS = 80


@dataclass
class SourceFilterPair:
    z_src: np.ndarray  # (frames, 80)
    z_ftr: np.ndarray  # (frames, 80)

    def __post_init__(self):
        self.z_src = np.asarray(self.z_src, dtype=np.float64)
        self.z_ftr = np.asarray(self.z_ftr, dtype=np.float64)
        if self.z_src.shape != self.z_ftr.shape:
            raise ValueError("z_src and z_ftr must have equal shapes")
        if not (np.all(np.isfinite(self.z_src)) and np.all(np.isfinite(self.z_ftr))):
            raise ValueError("non-finite entries")


def cosine_similarity(a: SpeakerEmbedding, b: SpeakerEmbedding) -> float:
    """dot(a, b) / (|a| |b|), clamped to [-1, 1]."""
    na = np.linalg.norm(a.values)
    nb = np.linalg.norm(b.values)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity undefined for zero-norm embedding")
    return float(np.clip(a.values @ b.values / (na * nb), -1.0, 1.0))


def speaker_similarity_score(
    pairs: Sequence[Tuple[SpeakerEmbedding, SpeakerEmbedding]]
) -> float:
    """Mean pairwise cosine over (generated, reference) pairs."""
    if len(pairs) == 0:
        raise ValueError("need at least one pair")
    return float(np.mean([cosine_similarity(g, r) for g, r in pairs]))


def _toy_matrices(seed: int, shapes):
    rng = np.random.default_rng(seed)
    return [rng.normal(0.0, 1.0 / np.sqrt(s[1]), size=s) for s in shapes]


def toy_source_encode(
    p: PitchContour, s: SpeakerEmbedding, frames: int, seed: int = 0
) -> np.ndarray:
    """Linear (zero-bias) map from (normalized F0, embedding) to mel rows.

    The contour is resampled by nearest-frame index to the requested
    frame count; unvoiced frames contribute zero through the pitch term.
    """
    if frames < 1:
        raise ValueError("frames must be >= 1")
    if p.voiced.any():
        f0n = normalize_f0(p)
    else:
        f0n = np.zeros_like(p.f0)
    idx = np.minimum(
        (np.arange(frames) * p.f0.size / frames).astype(int), p.f0.size - 1
    )
    pitch_col = f0n[idx]
    (w_pitch,) = _toy_matrices(seed, [(1, N_MELS)])
    (w_spk,) = _toy_matrices(seed + 1, [(EMBED_DIM, N_MELS)])
    return pitch_col[:, None] * w_pitch + np.tile(s.values @ w_spk, (frames, 1))


def toy_filter_encode(
    content: MelSpectrogram, s_cmb: SpeakerEmbedding, seed: int = 0
) -> np.ndarray:
    """Linear (zero-bias) map from (mel frame, fused embedding) to mel rows."""
    v = content.values
    if v.shape[1] != N_MELS:
        raise ValueError(f"content mel must have {N_MELS} bands")
    (w_mel,) = _toy_matrices(seed + 2, [(N_MELS, N_MELS)])
    (w_spk,) = _toy_matrices(seed + 3, [(EMBED_DIM, N_MELS)])
    return v @ w_mel + np.tile(s_cmb.values @ w_spk, (v.shape[0], 1))


def reconstruction_l1(x_mel: MelSpectrogram, pair: SourceFilterPair) -> float:
    """Mean absolute error between x_mel and z_src + z_ftr."""
    x = np.asarray(x_mel.values, dtype=np.float64)
    if x.shape != pair.z_src.shape:
        raise ValueError("x_mel shape must match the source/filter pair")
    return float(np.mean(np.abs(x - (pair.z_src + pair.z_ftr))))

"""Fusing forward and reversed-speech speaker embeddings.

The base combination is elementwise alpha * s + beta * s_rev with both
weights in [0, 1] (summing to one is not required). The cross-attention
variant reshapes each 256-D vector into 8 tokens of 32 dims, lets the
forward embedding attend to the reversed one with a single head, and
adds the result residually on top of the weighted base.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .embedding import EMBED_DIM, SpeakerEmbedding

N_TOKENS = 8
TOKEN_DIM = 32

MODE_WEIGHTED = "weighted"
MODE_CROSS_ATTENTION = "cross_attention"


@dataclass
class CrossAttentionParams:
    wq: np.ndarray  # (32, 32)
    wk: np.ndarray
    wv: np.ndarray

    def __post_init__(self):
        for name in ("wq", "wk", "wv"):
            m = np.asarray(getattr(self, name), dtype=np.float64)
            if m.shape != (TOKEN_DIM, TOKEN_DIM):
                raise ValueError(f"{name} must be {TOKEN_DIM}x{TOKEN_DIM}")
            setattr(self, name, m)

    @classmethod
    def init(cls, seed: int = 0, scale: float = 0.1) -> "CrossAttentionParams":
        rng = np.random.default_rng(seed)
        shape = (TOKEN_DIM, TOKEN_DIM)
        return cls(*(rng.normal(0.0, scale / np.sqrt(TOKEN_DIM), shape) for _ in range(3)))

    @classmethod
    def zeros(cls) -> "CrossAttentionParams":
        z = np.zeros((TOKEN_DIM, TOKEN_DIM))
        return cls(z.copy(), z.copy(), z.copy())


@dataclass
class FusionConfig:
    alpha: float = 0.5
    beta: float = 0.5
    mode: str = MODE_WEIGHTED
    cross_params: Optional[CrossAttentionParams] = None

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ValueError("alpha and beta must lie in [0, 1]")
        if self.mode not in (MODE_WEIGHTED, MODE_CROSS_ATTENTION):
            raise ValueError(f"unknown fusion mode {self.mode!r}")
        if self.mode == MODE_CROSS_ATTENTION and self.cross_params is None:
            raise ValueError("cross-attention fusion needs cross_params")


def _check_pair(s: SpeakerEmbedding, s_rev: SpeakerEmbedding) -> None:
    if s.reversed or not s_rev.reversed:
        raise ValueError("expected (forward, reversed) embeddings in that order")


def fuse_weighted(
    s: SpeakerEmbedding, s_rev: SpeakerEmbedding, alpha: float, beta: float
) -> SpeakerEmbedding:
    """Elementwise alpha * s + beta * s_rev."""
    _check_pair(s, s_rev)
    if not (0.0 <= alpha <= 1.0 and 0.0 <= beta <= 1.0):
        raise ValueError("alpha and beta must lie in [0, 1]")
    return SpeakerEmbedding(alpha * s.values + beta * s_rev.values, s.source_id)


def _cross_attention_forward(q_vec: np.ndarray, kv_vec: np.ndarray, p: CrossAttentionParams):
    Tq = q_vec.reshape(N_TOKENS, TOKEN_DIM)
    Tk = kv_vec.reshape(N_TOKENS, TOKEN_DIM)
    Q = Tq @ p.wq
    K = Tk @ p.wk
    V = Tk @ p.wv
    S = Q @ K.T / np.sqrt(TOKEN_DIM)
    m = S.max(axis=1, keepdims=True)
    e = np.exp(S - m)
    A = e / e.sum(axis=1, keepdims=True)
    O = A @ V
    return O.ravel(), (Tq, Tk, Q, K, V, A)


def fuse_cross_attention(
    s: SpeakerEmbedding, s_rev: SpeakerEmbedding, cfg: FusionConfig
) -> SpeakerEmbedding:
    """Weighted base plus a residual where s attends to s_rev."""
    _check_pair(s, s_rev)
    if cfg.cross_params is None:
        raise ValueError("cross-attention fusion needs cross_params")
    base = fuse_weighted(s, s_rev, cfg.alpha, cfg.beta)
    residual, _ = _cross_attention_forward(s.values, s_rev.values, cfg.cross_params)
    return SpeakerEmbedding(base.values + residual, s.source_id)


def cross_attention_param_grads(
    s: SpeakerEmbedding,
    s_rev: SpeakerEmbedding,
    p: CrossAttentionParams,
    d_out: np.ndarray,
) -> dict:
    """Gradients of d_out . residual(s, s_rev) w.r.t. wq, wk, wv."""
    _, (Tq, Tk, Q, K, V, A) = _cross_attention_forward(s.values, s_rev.values, p)
    dO = np.asarray(d_out, dtype=np.float64).reshape(N_TOKENS, TOKEN_DIM)
    dA = dO @ V.T
    dV = A.T @ dO
    dS = A * (dA - (dA * A).sum(axis=1, keepdims=True))
    dQ = dS @ K / np.sqrt(TOKEN_DIM)
    dK = dS.T @ Q / np.sqrt(TOKEN_DIM)
    return {"wq": Tq.T @ dQ, "wk": Tk.T @ dK, "wv": Tk.T @ dV}


def fuse(s: SpeakerEmbedding, s_rev: SpeakerEmbedding, cfg: FusionConfig) -> SpeakerEmbedding:
    if cfg.mode == MODE_CROSS_ATTENTION:
        return fuse_cross_attention(s, s_rev, cfg)
    return fuse_weighted(s, s_rev, cfg.alpha, cfg.beta)


def sweep_weights(
    s: SpeakerEmbedding,
    s_rev: SpeakerEmbedding,
    grid: Sequence[Tuple[float, float]],
) -> List[Tuple[float, float, SpeakerEmbedding]]:
    """One weighted fusion per (alpha, beta) grid point, order preserved."""
    if len(grid) == 0:
        raise ValueError("grid must be non-empty")
    return [(a, b, fuse_weighted(s, s_rev, a, b)) for a, b in grid]

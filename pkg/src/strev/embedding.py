"""Speaker embeddings from log-mel frames.

Two embedders share the 256-D output contract:

* mel_stats_embed: deterministic per-band statistics (mean, std,
  band-group energy quantiles). Exactly invariant under any permutation
  of frames, which makes it the reference embedder for reversal
  experiments.
* attention_encode: a small trainable encoder, two multi-head
  self-attention layers with residual connections (no positional
  encoding), attentive statistics pooling, linear projection to 256-D.
  Forward and backward are plain numpy; gradients are checked against
  finite differences in the test suite.

Cross-frame reductions in the encoder forward pass sum their addends in
sorted order, so shuffling the input frames reproduces the embedding
bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .audio_io import Waveform
from .reversal import ReversalSpec, apply_reversal
from .spectral import MelSpectrogram, StftConfig, mel_spectrogram

EMBED_DIM = 256
N_LAYERS = 2
_POOL_EPS = 1e-8
_QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95, 1.0)
_N_BAND_GROUPS = 16


@dataclass
class SpeakerEmbedding:
    values: np.ndarray  # (256,)
    source_id: str = ""
    reversed: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (EMBED_DIM,):
            raise ValueError(f"embedding must be {EMBED_DIM}-D")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("embedding contains non-finite entries")


# ---------------------------------------------------------------------------
# deterministic mel-statistics embedder


def mel_stats_embed(m: MelSpectrogram, source_id: str = "") -> SpeakerEmbedding:
    """80 band means + 80 band stds + 96 band-group energy quantiles.

    Population std; quantiles are taken over frames within 16 contiguous
    5-band groups at 6 fixed levels (16 * 6 = 96). Every part is a
    frame-order-free statistic.
    """
    v = m.values
    if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] != 80:
        raise ValueError("expected a non-empty (frames, 80) mel matrix")
    # per-band reductions over sorted frames: exact permutation invariance
    vs = np.sort(v, axis=0)
    means = vs.mean(axis=0)
    stds = vs.std(axis=0)
    groups = v.reshape(v.shape[0], _N_BAND_GROUPS, 80 // _N_BAND_GROUPS).mean(axis=2)
    quants = np.quantile(groups, _QUANTILES, axis=0).ravel()
    return SpeakerEmbedding(np.concatenate([means, stds, quants]), source_id)


# ---------------------------------------------------------------------------
# attention encoder


@dataclass
class EncoderParams:
    d_model: int
    n_heads: int
    dropout: float
    seed: int
    tensors: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ValueError("n_heads must divide d_model")

    @classmethod
    def init(
        cls, d_model: int = 64, n_heads: int = 4, dropout: float = 0.1, seed: int = 0
    ) -> "EncoderParams":
        rng = np.random.default_rng(seed)

        def lin(n_in, n_out):
            return rng.normal(0.0, 1.0 / np.sqrt(n_in), size=(n_in, n_out))

        t = {"w_in": lin(80, d_model), "b_in": np.zeros(d_model)}
        for l in range(N_LAYERS):
            for name in ("wq", "wk", "wv", "wo"):
                t[f"l{l}_{name}"] = lin(d_model, d_model)
        t["pool_w"] = lin(d_model, d_model)
        t["pool_u"] = rng.normal(0.0, 1.0 / np.sqrt(d_model), size=d_model)
        t["w_out"] = lin(2 * d_model, EMBED_DIM)
        t["b_out"] = np.zeros(EMBED_DIM)
        return cls(d_model, n_heads, dropout, seed, t)

    def copy(self) -> "EncoderParams":
        return replace(self, tensors={k: v.copy() for k, v in self.tensors.items()})

    def save(self, path) -> None:
        doc = {
            "format_version": 1,
            "d_model": self.d_model,
            "n_heads": self.n_heads,
            "dropout": self.dropout,
            "seed": self.seed,
            "tensors": {
                k: {"shape": list(v.shape), "data": v.ravel().tolist()}
                for k, v in self.tensors.items()
            },
        }
        with open(path, "w") as fh:
            json.dump(doc, fh)

    @classmethod
    def load(cls, path) -> "EncoderParams":
        with open(path) as fh:
            doc = json.load(fh)
        if doc.get("format_version") != 1:
            raise ValueError(f"unsupported checkpoint version {doc.get('format_version')!r}")
        tensors = {
            k: np.asarray(spec["data"], dtype=np.float64).reshape(spec["shape"])
            for k, spec in doc["tensors"].items()
        }
        return cls(doc["d_model"], doc["n_heads"], doc["dropout"], doc["seed"], tensors)


def _osum(a: np.ndarray, axis: int, keepdims: bool = False) -> np.ndarray:
    """Sum with addends in sorted order: invariant to input permutation."""
    return np.sort(a, axis=axis).sum(axis=axis, keepdims=keepdims)


def _osoftmax(s: np.ndarray, axis: int = -1) -> np.ndarray:
    m = s.max(axis=axis, keepdims=True)
    e = np.exp(s - m)
    return e / _osum(e, axis=axis, keepdims=True)


def _split_heads(x: np.ndarray, h: int) -> np.ndarray:
    t, d = x.shape
    return x.reshape(t, h, d // h).transpose(1, 0, 2)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    h, t, dh = x.shape
    return x.transpose(1, 0, 2).reshape(t, h * dh)


def _encode_forward(x: np.ndarray, p: EncoderParams, train: bool = False, rng=None):
    """Forward pass; returns (embedding, cache for backward)."""
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("expected a non-empty (frames, bands) matrix")
    if x.shape[1] != p.tensors["w_in"].shape[0]:
        raise ValueError(
            f"input has {x.shape[1]} bands, encoder expects "
            f"{p.tensors['w_in'].shape[0]}"
        )
    t = p.tensors
    h = p.n_heads
    dh = p.d_model // h
    cache = {"x": x, "layers": []}

    P = x @ t["w_in"] + t["b_in"]
    for l in range(N_LAYERS):
        Q = P @ t[f"l{l}_wq"]
        K = P @ t[f"l{l}_wk"]
        V = P @ t[f"l{l}_wv"]
        Qh, Kh, Vh = (_split_heads(m, h) for m in (Q, K, V))
        S = Qh @ Kh.transpose(0, 2, 1) / np.sqrt(dh)
        A = _osoftmax(S, axis=-1)
        Oh = _osum(A[:, :, :, None] * Vh[:, None, :, :], axis=2)
        H = _merge_heads(Oh)
        O = H @ t[f"l{l}_wo"]
        if train and p.dropout > 0.0:
            mask = (rng.random(O.shape) >= p.dropout) / (1.0 - p.dropout)
            O = O * mask
        else:
            mask = None
        cache["layers"].append((P, Qh, Kh, Vh, A, H, mask))
        P = P + O

    Z = np.tanh(P @ t["pool_w"])
    # einsum keeps each frame's score a row-local reduction (BLAS gemv is
    # not bitwise row-permutation-equivariant)
    s = np.einsum("td,d->t", Z, t["pool_u"])
    a = _osoftmax(s, axis=0)
    mu = _osum(a[:, None] * P, axis=0)
    R = P - mu
    var = _osum(a[:, None] * R**2, axis=0)
    sig = np.sqrt(var + _POOL_EPS)
    pooled = np.concatenate([mu, sig])
    e = pooled @ t["w_out"] + t["b_out"]
    cache["pool"] = (P, Z, s, a, mu, R, sig, pooled)
    return e, cache


def _zero_grads(p: EncoderParams) -> dict:
    return {k: np.zeros_like(v) for k, v in p.tensors.items()}


def _encode_backward(de: np.ndarray, p: EncoderParams, cache: dict, grads: dict):
    """Accumulate parameter gradients for one utterance into grads."""
    t = p.tensors
    d = p.d_model
    h = p.n_heads
    dh = d // h

    P_fin, Z, s, a, mu, R, sig, pooled = cache["pool"]
    grads["b_out"] += de
    grads["w_out"] += np.outer(pooled, de)
    dpooled = t["w_out"] @ de
    dmu = dpooled[:d].copy()
    dsig = dpooled[d:]

    dvar = dsig / (2.0 * sig)
    da = (R**2) @ dvar
    dR = 2.0 * a[:, None] * R * dvar[None, :]
    dP = dR.copy()
    dmu -= dR.sum(axis=0)
    da += P_fin @ dmu
    dP += np.outer(a, dmu)

    ds = a * (da - float(da @ a))
    grads["pool_u"] += Z.T @ ds
    dZ = np.outer(ds, t["pool_u"])
    dpre = dZ * (1.0 - Z**2)
    grads["pool_w"] += P_fin.T @ dpre
    dP += dpre @ t["pool_w"].T

    for l in reversed(range(N_LAYERS)):
        P_in, Qh, Kh, Vh, A, H, mask = cache["layers"][l]
        dO = dP if mask is None else dP * mask
        grads[f"l{l}_wo"] += H.T @ dO
        dH = dO @ t[f"l{l}_wo"].T
        dOh = _split_heads(dH, h)
        dA = dOh @ Vh.transpose(0, 2, 1)
        dVh = A.transpose(0, 2, 1) @ dOh
        dS = A * (dA - (dA * A).sum(axis=-1, keepdims=True))
        dQh = dS @ Kh / np.sqrt(dh)
        dKh = dS.transpose(0, 2, 1) @ Qh / np.sqrt(dh)
        dQ, dK, dV = (_merge_heads(m) for m in (dQh, dKh, dVh))
        grads[f"l{l}_wq"] += P_in.T @ dQ
        grads[f"l{l}_wk"] += P_in.T @ dK
        grads[f"l{l}_wv"] += P_in.T @ dV
        dP = (
            dP
            + dQ @ t[f"l{l}_wq"].T
            + dK @ t[f"l{l}_wk"].T
            + dV @ t[f"l{l}_wv"].T
        )

    grads["w_in"] += cache["x"].T @ dP
    grads["b_in"] += dP.sum(axis=0)


def attention_encode(
    m: MelSpectrogram, p: EncoderParams, source_id: str = ""
) -> SpeakerEmbedding:
    """Deterministic inference pass (dropout off)."""
    e, _ = _encode_forward(np.asarray(m.values, dtype=np.float64), p)
    return SpeakerEmbedding(e, source_id)


# ---------------------------------------------------------------------------
# contrastive training


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


def contrastive_loss(
    embs: np.ndarray, labels: Sequence, margin: float = 0.2
):
    """Cosine-margin contrastive loss over all pairs.

    Same-speaker pairs are pulled toward cosine 1; cross-speaker pairs
    are penalized only above the margin. Returns (loss, d_loss/d_embs).
    """
    n = embs.shape[0]
    norms = np.linalg.norm(embs, axis=1)
    same_pairs = []
    diff_pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            (same_pairs if labels[i] == labels[j] else diff_pairs).append((i, j))
    if not same_pairs or not diff_pairs:
        raise ValueError("corpus must contain both same- and cross-speaker pairs")

    loss = 0.0
    dembs = np.zeros_like(embs)

    def cos_grad(i, j, coeff):
        c = float(embs[i] @ embs[j]) / (norms[i] * norms[j])
        dembs[i] += coeff * (embs[j] / (norms[i] * norms[j]) - c * embs[i] / norms[i] ** 2)
        dembs[j] += coeff * (embs[i] / (norms[i] * norms[j]) - c * embs[j] / norms[j] ** 2)
        return c

    w_same = 1.0 / len(same_pairs)
    for i, j in same_pairs:
        c = cos_grad(i, j, -w_same)
        loss += w_same * (1.0 - c)
    w_diff = 1.0 / len(diff_pairs)
    for i, j in diff_pairs:
        c = float(embs[i] @ embs[j]) / (norms[i] * norms[j])
        if c > margin:
            loss += w_diff * (c - margin)
            cos_grad(i, j, w_diff)
    return loss, dembs


def loss_and_grads(
    mels: Sequence[np.ndarray],
    labels: Sequence,
    p: EncoderParams,
    margin: float = 0.2,
    train: bool = False,
    rng=None,
):
    """Contrastive loss over a batch of mel matrices plus parameter grads."""
    caches = []
    embs = np.empty((len(mels), EMBED_DIM))
    for i, m in enumerate(mels):
        embs[i], cache = _encode_forward(m, p, train=train, rng=rng)
        caches.append(cache)
    loss, dembs = contrastive_loss(embs, labels, margin)
    grads = _zero_grads(p)
    for i, cache in enumerate(caches):
        _encode_backward(dembs[i], p, cache, grads)
    return loss, grads


@dataclass
class TrainResult:
    params: EncoderParams
    losses: list


def train_encoder(
    corpus: Sequence,
    p: EncoderParams,
    steps: int,
    lr: float = 1e-3,
    margin: float = 0.2,
    stft_cfg: StftConfig = StftConfig(),
) -> TrainResult:
    """Adam on the contrastive objective over (speaker_label, Waveform) pairs.

    Deterministic given (corpus, params, steps): dropout draws come from
    a generator seeded by the params seed and gradient accumulation
    order is fixed.
    """
    labels = [label for label, _ in corpus]
    counts = {}
    for label in labels:
        counts[label] = counts.get(label, 0) + 1
    if len(counts) < 2 or min(counts.values()) < 2:
        raise ValueError("need at least 2 speakers with 2 utterances each")

    mels = [mel_spectrogram(w, stft_cfg).values for _, w in corpus]
    params = p.copy()
    if steps == 0:
        return TrainResult(params, [])

    rng = np.random.default_rng(params.seed)
    m_state = _zero_grads(params)
    v_state = _zero_grads(params)
    b1, b2, eps = 0.9, 0.999, 1e-8
    losses = []
    for step in range(1, steps + 1):
        loss, grads = loss_and_grads(mels, labels, params, margin, train=True, rng=rng)
        losses.append(loss)
        for k in params.tensors:
            m_state[k] = b1 * m_state[k] + (1 - b1) * grads[k]
            v_state[k] = b2 * v_state[k] + (1 - b2) * grads[k] ** 2
            mhat = m_state[k] / (1 - b1**step)
            vhat = v_state[k] / (1 - b2**step)
            params.tensors[k] -= lr * mhat / (np.sqrt(vhat) + eps)
    return TrainResult(params, losses)


# ---------------------------------------------------------------------------
# waveform-level convenience


def utterance_embed(
    w: Waveform,
    encoder: Optional[EncoderParams] = None,
    spec: Optional[ReversalSpec] = None,
    stft_cfg: StftConfig = StftConfig(),
) -> SpeakerEmbedding:
    """Optionally reverse, then mel, then embed.

    encoder=None uses the mel-statistics embedder; otherwise the
    attention encoder with the given parameters.
    """
    signal = apply_reversal(w, spec) if spec is not None else w
    mel = mel_spectrogram(signal, stft_cfg)
    if encoder is None:
        emb = mel_stats_embed(mel, source_id=w.id)
    else:
        emb = attention_encode(mel, encoder, source_id=w.id)
    emb.reversed = spec is not None
    return emb

"""Experiment harness: synthetic corpus, reversal sweep, fusion ablation.

The default corpus is synthetic: each speaker is a distinct harmonic
source (base F0 plus a fixed 3-formant filter profile) and utterances
vary glide and duration. Everything is a pure function of (config,
seed); reports are emitted as JSON plus a timestamp-free CSV so reruns
are byte-reproducible.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.signal import lfilter

from . import __version__
from .audio_io import Waveform, read_wav, write_wav
from .embedding import EncoderParams, SpeakerEmbedding, utterance_embed
from .fusion import fuse_weighted
from .metrics import cosine_similarity
from .pitch import contour_correlation, estimate_f0
from .reversal import ReversalSpec, apply_reversal
from .spectral import StftConfig

CONFIG_VERSION = 1
DEFAULT_STRATEGIES = [10.0, 20.0, 50.0, 100.0, 200.0, 500.0, "full"]
DEFAULT_GRID = [(0.0, 1.0), (0.25, 0.75), (0.5, 0.5), (0.75, 0.25), (1.0, 0.0)]

_HOP = 320  # utterance lengths are multiples of this so framing aligns


@dataclass
class CorpusItem:
    speaker: str
    utt: str
    waveform: Waveform


# ---------------------------------------------------------------------------
# synthetic corpus

_FORMANT_BANDS = [(300.0, 900.0), (900.0, 2200.0), (2200.0, 3400.0)]


def _resonator(fc: float, bw: float, sr: int):
    r = np.exp(-np.pi * bw / sr)
    theta = 2.0 * np.pi * fc / sr
    return [1.0 - r], [1.0, -2.0 * r * np.cos(theta), r * r]


def synth_corpus(
    n_speakers: int, utts_per_speaker: int, seed: int, sample_rate: int = 16000
) -> List[CorpusItem]:
    """Deterministic labelled corpus of harmonic-source utterances."""
    if n_speakers < 2 or utts_per_speaker < 1:
        raise ValueError("need n_speakers >= 2 and utts_per_speaker >= 1")
    rng = np.random.default_rng(seed)
    base_f0s = np.linspace(90.0, 300.0, n_speakers) * rng.uniform(
        0.97, 1.03, n_speakers
    )
    formants = [
        [(rng.uniform(lo, hi), rng.uniform(60.0, 120.0)) for lo, hi in _FORMANT_BANDS]
        for _ in range(n_speakers)
    ]

    items = []
    for si in range(n_speakers):
        for ui in range(utts_per_speaker):
            n = int(rng.integers(40, 76)) * _HOP  # 0.8 .. 1.5 s at 16 kHz
            g0, g1 = rng.uniform(0.85, 1.15, 2)
            f0 = base_f0s[si] * np.linspace(g0, g1, n)
            phase = 2.0 * np.pi * np.cumsum(f0) / sample_rate
            x = np.zeros(n)
            for k in range(1, 11):
                if k * f0.max() < 0.48 * sample_rate:
                    x += np.sin(k * phase) / k
            for fc, bw in formants[si]:
                b, a = _resonator(fc, bw, sample_rate)
                x = lfilter(b, a, x)
            fade = int(0.01 * sample_rate)
            env = np.ones(n)
            ramp = 0.5 * (1.0 - np.cos(np.pi * np.arange(fade) / fade))
            env[:fade] = ramp
            env[-fade:] = ramp[::-1]
            x *= env
            peak = np.abs(x).max()
            if peak > 0:
                x *= 0.5 / peak
            items.append(
                CorpusItem(
                    f"spk{si}",
                    f"utt{ui}",
                    Waveform(x, sample_rate, id=f"spk{si}/utt{ui}"),
                )
            )
    return items


def save_corpus(items: Sequence[CorpusItem], out_dir) -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for item in items:
        p = out / f"{item.speaker}__{item.utt}.wav"
        write_wav(item.waveform, p)
        paths.append(p)
    return paths


def load_corpus(path) -> List[CorpusItem]:
    """Read a directory of `<speaker>__<utt>.wav` files."""
    files = sorted(Path(path).glob("*.wav"))
    if not files:
        raise FileNotFoundError(f"no .wav files under {path}")
    items = []
    for f in files:
        stem = f.stem
        speaker, _, utt = stem.partition("__")
        items.append(CorpusItem(speaker, utt or stem, read_wav(f)))
    return items


# ---------------------------------------------------------------------------
# configuration


def parse_strategy(value) -> ReversalSpec:
    if isinstance(value, str) and value.lower() in ("full", "full-length"):
        return ReversalSpec.full()
    return ReversalSpec.windowed(float(value))


@dataclass
class RunConfig:
    corpus_path: Optional[str] = None
    n_speakers: int = 6
    utts_per_speaker: int = 4
    seed: int = 7
    stft: StftConfig = field(default_factory=StftConfig)
    strategies: list = field(default_factory=lambda: list(DEFAULT_STRATEGIES))
    grid: list = field(default_factory=lambda: list(DEFAULT_GRID))
    embedder: str = "mel_stats"  # or "attention"
    checkpoint: Optional[str] = None
    pairing: str = "same-utterance"
    out_dir: Optional[str] = None
    workers: int = 1
    pitch_proxy: bool = False

    def __post_init__(self):
        if not self.strategies:
            raise ValueError("strategy list must be non-empty")
        for a, b in self.grid:
            if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
                raise ValueError("grid entries must lie in [0,1]^2")
        if self.embedder not in ("mel_stats", "attention"):
            raise ValueError(f"unknown embedder {self.embedder!r}")
        if self.embedder == "attention" and not self.checkpoint:
            raise ValueError("attention embedder needs a checkpoint path")

    def to_dict(self) -> dict:
        return {
            "version": CONFIG_VERSION,
            "corpus_path": self.corpus_path,
            "n_speakers": self.n_speakers,
            "utts_per_speaker": self.utts_per_speaker,
            "seed": self.seed,
            "stft": {
                "n_fft": self.stft.n_fft,
                "hop": self.stft.hop,
                "win_length": self.stft.win_length,
                "center": self.stft.center,
            },
            "strategies": self.strategies,
            "grid": [list(g) for g in self.grid],
            "embedder": self.embedder,
            "checkpoint": self.checkpoint,
            "pairing": self.pairing,
            "workers": self.workers,
            "pitch_proxy": self.pitch_proxy,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        version = doc.get("version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ValueError(f"unsupported config version {version!r}")
        stft = StftConfig(**doc["stft"]) if "stft" in doc else StftConfig()
        kwargs = {
            k: doc[k]
            for k in (
                "corpus_path",
                "n_speakers",
                "utts_per_speaker",
                "seed",
                "strategies",
                "embedder",
                "checkpoint",
                "pairing",
                "out_dir",
                "workers",
                "pitch_proxy",
            )
            if k in doc
        }
        if "grid" in doc:
            kwargs["grid"] = [tuple(g) for g in doc["grid"]]
        return cls(stft=stft, **kwargs)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


@dataclass
class EvaluationReport:
    kind: str  # "reversal_sweep" | "fusion_ablation"
    rows: List[dict]
    metadata: dict

    def __post_init__(self):
        for row in self.rows:
            ss = row.get("ss")
            if ss is None or not (-1.0 <= ss <= 1.0):
                raise ValueError(f"row without a valid score: {row!r}")


def _resolve_corpus(cfg: RunConfig) -> List[CorpusItem]:
    if cfg.corpus_path:
        return load_corpus(cfg.corpus_path)
    return synth_corpus(cfg.n_speakers, cfg.utts_per_speaker, cfg.seed)


def _encoder(cfg: RunConfig) -> Optional[EncoderParams]:
    if cfg.embedder == "attention":
        return EncoderParams.load(cfg.checkpoint)
    return None


def _map(fn, items, workers: int):
    """Order-preserving map, optionally threaded (fixed reduction order)."""
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _metadata(cfg: RunConfig) -> dict:
    return {
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "version": __version__,
        "generated_at": datetime.now(timezone.utc).isoformat(),
    }


def run_reversal_sweep(cfg: RunConfig) -> EvaluationReport:
    """Score each reversal strategy against the unreversed embedding.

    Pairing is same-utterance: every utterance's strategy-reversed
    embedding is compared with its own forward embedding.
    """
    corpus = _resolve_corpus(cfg)
    encoder = _encoder(cfg)

    def fwd(item: CorpusItem) -> SpeakerEmbedding:
        return utterance_embed(item.waveform, encoder, None, cfg.stft)

    forwards = _map(fwd, corpus, cfg.workers)

    rows = []
    for raw in cfg.strategies:
        spec = parse_strategy(raw)

        def one(pair):
            item, e_fwd = pair
            e_rev = utterance_embed(item.waveform, encoder, spec, cfg.stft)
            cos = cosine_similarity(e_rev, e_fwd)
            proxy = None
            if cfg.pitch_proxy:
                proxy = _pitch_proxy(item.waveform, spec)
            return cos, proxy

        results = _map(one, list(zip(corpus, forwards)), cfg.workers)
        cosines = [c for c, _ in results]
        row = {
            "strategy": spec.label(),
            "ss": float(np.mean(cosines)),
            "n_pairs": len(cosines),
        }
        if cfg.pitch_proxy:
            proxies = [p for _, p in results if p is not None]
            row["pitch_corr"] = float(np.mean(proxies)) if proxies else None
        rows.append(row)
    return EvaluationReport("reversal_sweep", rows, _metadata(cfg))


def _pitch_proxy(w: Waveform, spec: ReversalSpec) -> Optional[float]:
    """Correlation between the processed contour and the original one
    (frame-reversed for full reversal); None when undefined."""
    try:
        orig = estimate_f0(w)
        proc = estimate_f0(apply_reversal(w, spec))
        if spec.mode == "full":
            orig = type(orig)(
                orig.f0[::-1].copy(), orig.voiced[::-1].copy(), orig.hop, orig.sample_rate
            )
        return contour_correlation(proc, orig)
    except ValueError:
        return None


def run_fusion_ablation(cfg: RunConfig) -> EvaluationReport:
    """Score fused embeddings against per-speaker forward centroids."""
    corpus = _resolve_corpus(cfg)
    encoder = _encoder(cfg)
    full = ReversalSpec.full()

    def embed_pair(item: CorpusItem):
        e_fwd = utterance_embed(item.waveform, encoder, None, cfg.stft)
        e_rev = utterance_embed(item.waveform, encoder, full, cfg.stft)
        return e_fwd, e_rev

    pairs = _map(embed_pair, corpus, cfg.workers)

    centroids = {}
    for item, (e_fwd, _) in zip(corpus, pairs):
        centroids.setdefault(item.speaker, []).append(e_fwd.values)
    centroids = {
        spk: SpeakerEmbedding(np.mean(vals, axis=0), spk)
        for spk, vals in centroids.items()
    }

    rows = []
    for alpha, beta in cfg.grid:
        cosines = []
        for item, (e_fwd, e_rev) in zip(corpus, pairs):
            fused = fuse_weighted(e_fwd, e_rev, alpha, beta)
            cosines.append(cosine_similarity(fused, centroids[item.speaker]))
        rows.append(
            {
                "alpha": alpha,
                "beta": beta,
                "ss": float(np.mean(cosines)),
                "n_pairs": len(cosines),
            }
        )
    return EvaluationReport("fusion_ablation", rows, _metadata(cfg))


# ---------------------------------------------------------------------------
# report emission


def report_csv_body(r: EvaluationReport) -> str:
    """CSV text with config hash and seed but no timestamp (reproducible)."""
    buf = io.StringIO()
    buf.write(f"# kind={r.kind}\n")
    buf.write(f"# config_hash={r.metadata['config_hash']}\n")
    buf.write(f"# seed={r.metadata['seed']}\n")
    fields = list(r.rows[0].keys())
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in r.rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def emit_report(r: EvaluationReport, out_dir) -> Tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "report.json"
    csv_path = out / "report.csv"
    with open(json_path, "w") as fh:
        json.dump({"kind": r.kind, "rows": r.rows, "metadata": r.metadata}, fh, indent=2)
    csv_path.write_text(report_csv_body(r))
    return json_path, csv_path


def load_report(path) -> EvaluationReport:
    with open(path) as fh:
        doc = json.load(fh)
    return EvaluationReport(doc["kind"], doc["rows"], doc["metadata"])

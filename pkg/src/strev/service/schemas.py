"""Pydantic request/response models for the HTTP API.

File-heavy operations exchange paths rather than sample payloads: the
service is meant to run next to the data it processes.
"""

from __future__ import annotations

from typing import List, Optional, Tuple, Union

from pydantic import BaseModel, Field


class StftOptions(BaseModel):
    n_fft: int = 1280
    hop: int = 320
    win_length: int = 1280
    center: bool = True


class ReversalOptions(BaseModel):
    mode: str = Field(description="'full' or 'windowed'")
    window_ms: Optional[float] = None


class ReverseRequest(BaseModel):
    input_path: str
    output_path: str
    reversal: ReversalOptions


class ReverseResponse(BaseModel):
    output_path: str
    n_samples: int
    sample_rate: int


class SynthRequest(BaseModel):
    out_dir: str
    n_speakers: int = 6
    utts_per_speaker: int = 4
    seed: int = 7


class SynthResponse(BaseModel):
    files: List[str]


class EmbedRequest(BaseModel):
    input_path: str
    embedder: str = "mel_stats"
    checkpoint: Optional[str] = None
    reversal: Optional[ReversalOptions] = None
    stft: StftOptions = StftOptions()


class EmbedResponse(BaseModel):
    values: List[float]
    source_id: str
    reversed: bool


class RunConfigModel(BaseModel):
    version: int = 1
    corpus_path: Optional[str] = None
    n_speakers: int = 6
    utts_per_speaker: int = 4
    seed: int = 7
    stft: StftOptions = StftOptions()
    strategies: List[Union[float, str]] = [10.0, 20.0, 50.0, 100.0, 200.0, 500.0, "full"]
    grid: List[Tuple[float, float]] = [
        (0.0, 1.0),
        (0.25, 0.75),
        (0.5, 0.5),
        (0.75, 0.25),
        (1.0, 0.0),
    ]
    embedder: str = "mel_stats"
    checkpoint: Optional[str] = None
    pairing: str = "same-utterance"
    workers: int = 1
    pitch_proxy: bool = False


class RunRequest(BaseModel):
    config: RunConfigModel
    out_dir: Optional[str] = None


class ReportResponse(BaseModel):
    kind: str
    rows: List[dict]
    metadata: dict
    json_path: Optional[str] = None
    csv_path: Optional[str] = None


class TrainRequest(BaseModel):
    out_checkpoint: str
    corpus_path: Optional[str] = None
    n_speakers: int = 6
    utts_per_speaker: int = 4
    seed: int = 7
    steps: int = 200
    d_model: int = 64
    n_heads: int = 4
    dropout: float = 0.1
    lr: float = 1e-3


class TrainResponse(BaseModel):
    checkpoint: str
    steps: int
    first_loss: Optional[float]
    final_loss: Optional[float]


class ErrorRecord(BaseModel):
    error: str
    message: str

"""FastAPI app exposing the reversal/embedding/evaluation operations."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..audio_io import UnsupportedWavError, WavFormatError, read_wav, write_wav
from ..embedding import EncoderParams, train_encoder, utterance_embed
from ..harness import (
    RunConfig,
    emit_report,
    run_fusion_ablation,
    run_reversal_sweep,
    synth_corpus,
    save_corpus,
    load_corpus,
)
from ..reversal import ReversalSpec, apply_reversal
from ..spectral import StftConfig
from . import schemas


def _reversal_spec(opts: schemas.ReversalOptions | None) -> ReversalSpec | None:
    if opts is None:
        return None
    if opts.mode == "full":
        return ReversalSpec.full()
    return ReversalSpec.windowed(opts.window_ms)


def _stft_config(opts: schemas.StftOptions) -> StftConfig:
    return StftConfig(opts.n_fft, opts.hop, opts.win_length, opts.center)


def _run_config(model: schemas.RunConfigModel) -> RunConfig:
    return RunConfig(
        corpus_path=model.corpus_path,
        n_speakers=model.n_speakers,
        utts_per_speaker=model.utts_per_speaker,
        seed=model.seed,
        stft=_stft_config(model.stft),
        strategies=list(model.strategies),
        grid=[tuple(g) for g in model.grid],
        embedder=model.embedder,
        checkpoint=model.checkpoint,
        pairing=model.pairing,
        workers=model.workers,
        pitch_proxy=model.pitch_proxy,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="strev", version=__version__)

    @app.exception_handler(FileNotFoundError)
    @app.exception_handler(WavFormatError)
    @app.exception_handler(UnsupportedWavError)
    @app.exception_handler(ValueError)
    async def _domain_error(request: Request, exc: Exception):
        record = schemas.ErrorRecord(error=type(exc).__name__, message=str(exc))
        status = 404 if isinstance(exc, FileNotFoundError) else 422
        return JSONResponse(status_code=status, content=record.model_dump())

    @app.get("/health")
    async def health():
        return {"status": "ok", "version": __version__}

    @app.post("/reverse", response_model=schemas.ReverseResponse)
    def reverse(req: schemas.ReverseRequest):
        w = read_wav(req.input_path)
        out = apply_reversal(w, _reversal_spec(req.reversal))
        write_wav(out, req.output_path)
        return schemas.ReverseResponse(
            output_path=req.output_path,
            n_samples=out.samples.size,
            sample_rate=out.sample_rate,
        )

    @app.post("/synth", response_model=schemas.SynthResponse)
    def synth(req: schemas.SynthRequest):
        items = synth_corpus(req.n_speakers, req.utts_per_speaker, req.seed)
        paths = save_corpus(items, req.out_dir)
        return schemas.SynthResponse(files=[str(p) for p in paths])

    @app.post("/embed", response_model=schemas.EmbedResponse)
    def embed(req: schemas.EmbedRequest):
        w = read_wav(req.input_path)
        encoder = None
        if req.embedder == "attention":
            if not req.checkpoint:
                raise ValueError("attention embedder needs a checkpoint path")
            encoder = EncoderParams.load(req.checkpoint)
        elif req.embedder != "mel_stats":
            raise ValueError(f"unknown embedder {req.embedder!r}")
        emb = utterance_embed(
            w, encoder, _reversal_spec(req.reversal), _stft_config(req.stft)
        )
        return schemas.EmbedResponse(
            values=emb.values.tolist(), source_id=emb.source_id, reversed=emb.reversed
        )

    def _run_and_emit(report, out_dir):
        json_path = csv_path = None
        if out_dir:
            json_path, csv_path = emit_report(report, out_dir)
        return schemas.ReportResponse(
            kind=report.kind,
            rows=report.rows,
            metadata=report.metadata,
            json_path=str(json_path) if json_path else None,
            csv_path=str(csv_path) if csv_path else None,
        )

    @app.post("/sweep", response_model=schemas.ReportResponse)
    def sweep(req: schemas.RunRequest):
        return _run_and_emit(run_reversal_sweep(_run_config(req.config)), req.out_dir)

    @app.post("/ablate", response_model=schemas.ReportResponse)
    def ablate(req: schemas.RunRequest):
        return _run_and_emit(run_fusion_ablation(_run_config(req.config)), req.out_dir)

    @app.post("/train-encoder", response_model=schemas.TrainResponse)
    def train(req: schemas.TrainRequest):
        if req.corpus_path:
            items = load_corpus(req.corpus_path)
        else:
            items = synth_corpus(req.n_speakers, req.utts_per_speaker, req.seed)
        corpus = [(it.speaker, it.waveform) for it in items]
        params = EncoderParams.init(req.d_model, req.n_heads, req.dropout, req.seed)
        result = train_encoder(corpus, params, req.steps, lr=req.lr)
        result.params.save(req.out_checkpoint)
        return schemas.TrainResponse(
            checkpoint=req.out_checkpoint,
            steps=req.steps,
            first_loss=result.losses[0] if result.losses else None,
            final_loss=result.losses[-1] if result.losses else None,
        )

    return app

"""Thin HTTP client CLI for the strev service.

Every subcommand posts to the API. By default requests go to an
in-process app instance (no server needed); pass --server to talk to a
running one. Failures exit nonzero and print a machine-readable error
record on stderr.
"""

from __future__ import annotations

import json
import sys
from typing import Optional

import click
import httpx


def _client(server: Optional[str]) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app(), raise_server_exceptions=False)


def _post(ctx, path: str, payload: dict) -> dict:
    with _client(ctx.obj["server"]) as client:
        try:
            resp = client.post(path, json=payload)
        except httpx.HTTPError as exc:
            _fail({"error": type(exc).__name__, "message": str(exc)})
    if resp.status_code >= 400:
        try:
            _fail(resp.json())
        except json.JSONDecodeError:
            _fail({"error": f"HTTP {resp.status_code}", "message": resp.text})
    return resp.json()


def _fail(record: dict):
    json.dump(record, sys.stderr)
    sys.stderr.write("\n")
    sys.exit(1)


def _echo(doc: dict):
    click.echo(json.dumps(doc, indent=2))


@click.group()
@click.option("--server", default=None, help="Base URL of a running service; omit to run in-process.")
@click.pass_context
def main(ctx, server):
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command()
@click.argument("input_path")
@click.argument("output_path")
@click.option("--mode", type=click.Choice(["full", "windowed"]), default="full")
@click.option("--window-ms", type=float, default=None, help="Segment length for windowed mode.")
@click.pass_context
def reverse(ctx, input_path, output_path, mode, window_ms):
    """Time-reverse a WAV file."""
    payload = {
        "input_path": input_path,
        "output_path": output_path,
        "reversal": {"mode": mode, "window_ms": window_ms},
    }
    _echo(_post(ctx, "/reverse", payload))


@main.command()
@click.option("--out-dir", required=True)
@click.option("--n-speakers", type=int, default=6)
@click.option("--utts-per-speaker", type=int, default=4)
@click.option("--seed", type=int, default=7)
@click.pass_context
def synth(ctx, out_dir, n_speakers, utts_per_speaker, seed):
    """Generate the synthetic evaluation corpus."""
    payload = {
        "out_dir": out_dir,
        "n_speakers": n_speakers,
        "utts_per_speaker": utts_per_speaker,
        "seed": seed,
    }
    _echo(_post(ctx, "/synth", payload))


@main.command()
@click.argument("input_path")
@click.option("--embedder", type=click.Choice(["mel_stats", "attention"]), default="mel_stats")
@click.option("--checkpoint", default=None)
@click.option("--reverse", "reverse_mode", type=click.Choice(["full", "windowed"]), default=None)
@click.option("--window-ms", type=float, default=None)
@click.pass_context
def embed(ctx, input_path, embedder, checkpoint, reverse_mode, window_ms):
    """Print the 256-D speaker embedding of a WAV file."""
    payload = {"input_path": input_path, "embedder": embedder, "checkpoint": checkpoint}
    if reverse_mode:
        payload["reversal"] = {"mode": reverse_mode, "window_ms": window_ms}
    _echo(_post(ctx, "/embed", payload))


def _load_config(config, seed, overrides):
    doc = {}
    if config:
        with open(config) as fh:
            doc = json.load(fh)
    if seed is not None:
        doc["seed"] = seed
    doc.update({k: v for k, v in overrides.items() if v})
    return doc


@main.command()
@click.option("--config", default=None, help="JSON run-config file.")
@click.option("--out-dir", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--strategies", default=None, help="Comma list, e.g. '20,100,full'.")
@click.pass_context
def sweep(ctx, config, out_dir, seed, strategies):
    """Run the reversal-strategy similarity sweep."""
    overrides = {}
    if strategies:
        overrides["strategies"] = [
            s if s == "full" else float(s) for s in strategies.split(",")
        ]
    doc = _load_config(config, seed, overrides)
    _echo(_post(ctx, "/sweep", {"config": doc, "out_dir": out_dir}))


@main.command()
@click.option("--config", default=None, help="JSON run-config file.")
@click.option("--out-dir", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--grid", default=None, help="Semicolon list of alpha,beta pairs, e.g. '0.5,0.5;1,0'.")
@click.pass_context
def ablate(ctx, config, out_dir, seed, grid):
    """Run the fusion-weight ablation."""
    overrides = {}
    if grid:
        overrides["grid"] = [
            [float(x) for x in pair.split(",")] for pair in grid.split(";")
        ]
    doc = _load_config(config, seed, overrides)
    _echo(_post(ctx, "/ablate", {"config": doc, "out_dir": out_dir}))


@main.command("train-encoder")
@click.option("--out-checkpoint", required=True)
@click.option("--corpus-path", default=None)
@click.option("--n-speakers", type=int, default=6)
@click.option("--utts-per-speaker", type=int, default=4)
@click.option("--seed", type=int, default=7)
@click.option("--steps", type=int, default=200)
@click.option("--d-model", type=int, default=64)
@click.option("--n-heads", type=int, default=4)
@click.pass_context
def train_encoder(ctx, out_checkpoint, corpus_path, n_speakers, utts_per_speaker, seed, steps, d_model, n_heads):
    """Train the attention speaker encoder and save a checkpoint."""
    payload = {
        "out_checkpoint": out_checkpoint,
        "corpus_path": corpus_path,
        "n_speakers": n_speakers,
        "utts_per_speaker": utts_per_speaker,
        "seed": seed,
        "steps": steps,
        "d_model": d_model,
        "n_heads": n_heads,
    }
    _echo(_post(ctx, "/train-encoder", payload))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()

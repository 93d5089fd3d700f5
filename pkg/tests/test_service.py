import numpy as np
import pytest
from fastapi.testclient import TestClient

from strev.audio_io import read_wav
from strev.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(), raise_server_exceptions=False)


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory, client):
    d = tmp_path_factory.mktemp("corpus")
    resp = client.post(
        "/synth",
        json={"out_dir": str(d), "n_speakers": 2, "utts_per_speaker": 2, "seed": 5},
    )
    assert resp.status_code == 200
    assert len(resp.json()["files"]) == 4
    return d


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json()["status"] == "ok"


def test_reverse_endpoint(client, corpus_dir, tmp_path):
    src = corpus_dir / "spk0__utt0.wav"
    dst = tmp_path / "rev.wav"
    resp = client.post(
        "/reverse",
        json={
            "input_path": str(src),
            "output_path": str(dst),
            "reversal": {"mode": "full"},
        },
    )
    assert resp.status_code == 200
    orig = read_wav(src)
    rev = read_wav(dst)
    assert np.array_equal(rev.samples, orig.samples[::-1])


def test_reverse_missing_file(client, tmp_path):
    resp = client.post(
        "/reverse",
        json={
            "input_path": str(tmp_path / "nope.wav"),
            "output_path": str(tmp_path / "out.wav"),
            "reversal": {"mode": "full"},
        },
    )
    assert resp.status_code == 404
    body = resp.json()
    assert body["error"] == "FileNotFoundError"


def test_reverse_malformed_file(client, tmp_path):
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"garbage")
    resp = client.post(
        "/reverse",
        json={
            "input_path": str(bad),
            "output_path": str(tmp_path / "out.wav"),
            "reversal": {"mode": "full"},
        },
    )
    assert resp.status_code == 422
    assert resp.json()["error"] == "WavFormatError"


def test_embed_endpoint(client, corpus_dir):
    src = corpus_dir / "spk0__utt0.wav"
    resp = client.post("/embed", json={"input_path": str(src)})
    assert resp.status_code == 200
    body = resp.json()
    assert len(body["values"]) == 256
    assert body["reversed"] is False

    resp2 = client.post(
        "/embed",
        json={"input_path": str(src), "reversal": {"mode": "full"}},
    )
    assert resp2.json()["reversed"] is True


def test_embed_unknown_embedder(client, corpus_dir):
    resp = client.post(
        "/embed",
        json={"input_path": str(corpus_dir / "spk0__utt0.wav"), "embedder": "bogus"},
    )
    assert resp.status_code == 422


def test_sweep_endpoint(client, tmp_path):
    cfg = {
        "n_speakers": 2,
        "utts_per_speaker": 1,
        "seed": 2,
        "strategies": [20.0, "full"],
    }
    resp = client.post("/sweep", json={"config": cfg, "out_dir": str(tmp_path)})
    assert resp.status_code == 200
    body = resp.json()
    assert body["kind"] == "reversal_sweep"
    assert [r["strategy"] for r in body["rows"]] == ["20ms", "full"]
    assert (tmp_path / "report.csv").exists()
    assert (tmp_path / "report.json").exists()


def test_ablate_endpoint(client):
    cfg = {
        "n_speakers": 2,
        "utts_per_speaker": 2,
        "seed": 2,
        "grid": [[1.0, 0.0], [0.5, 0.5]],
    }
    resp = client.post("/ablate", json={"config": cfg})
    assert resp.status_code == 200
    body = resp.json()
    assert body["kind"] == "fusion_ablation"
    assert len(body["rows"]) == 2


def test_train_endpoint(client, corpus_dir, tmp_path):
    ckpt = tmp_path / "enc.json"
    resp = client.post(
        "/train-encoder",
        json={
            "out_checkpoint": str(ckpt),
            "corpus_path": str(corpus_dir),
            "steps": 2,
            "d_model": 8,
            "n_heads": 2,
        },
    )
    assert resp.status_code == 200
    assert ckpt.exists()
    body = resp.json()
    assert body["steps"] == 2
    assert body["first_loss"] is not None

    # the checkpoint drives the attention embedder end to end
    resp2 = client.post(
        "/embed",
        json={
            "input_path": str(corpus_dir / "spk0__utt0.wav"),
            "embedder": "attention",
            "checkpoint": str(ckpt),
        },
    )
    assert resp2.status_code == 200
    assert len(resp2.json()["values"]) == 256

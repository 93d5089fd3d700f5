import numpy as np
import pytest

from strev.embedding import EMBED_DIM, SpeakerEmbedding
from strev.metrics import (
    SourceFilterPair,
    cosine_similarity,
    reconstruction_l1,
    speaker_similarity_score,
    toy_filter_encode,
    toy_source_encode,
)
from strev.pitch import PitchContour
from strev.spectral import MelSpectrogram


def emb(values):
    return SpeakerEmbedding(np.asarray(values, dtype=np.float64))


def unit(i):
    v = np.zeros(EMBED_DIM)
    v[i] = 1.0
    return emb(v)


def test_cosine_self():
    a = emb(np.linspace(1, 2, EMBED_DIM))
    assert cosine_similarity(a, a) == pytest.approx(1.0)


def test_cosine_orthogonal():
    assert cosine_similarity(unit(0), unit(1)) == 0.0


def test_cosine_forced_arithmetic():
    v = np.zeros(EMBED_DIM)
    v[0] = v[1] = 1.0
    assert cosine_similarity(emb(v), unit(0)) == pytest.approx(1 / np.sqrt(2))


def test_cosine_zero_norm_rejected():
    with pytest.raises(ValueError):
        cosine_similarity(emb(np.zeros(EMBED_DIM)), unit(0))


def test_cosine_symmetry_and_scale_invariance(rng):
    a = emb(rng.normal(size=EMBED_DIM))
    b = emb(rng.normal(size=EMBED_DIM))
    assert cosine_similarity(a, b) == cosine_similarity(b, a)
    scaled = emb(7.5 * a.values)
    assert cosine_similarity(scaled, b) == pytest.approx(cosine_similarity(a, b))


def test_ss_identical_pairs():
    a = emb(np.linspace(1, 2, EMBED_DIM))
    assert speaker_similarity_score([(a, a), (a, a)]) == pytest.approx(1.0)


def test_ss_mean():
    a = unit(0)
    pairs = [(a, a), (unit(0), unit(1))]
    assert speaker_similarity_score(pairs) == pytest.approx(0.5)


def test_ss_empty_rejected():
    with pytest.raises(ValueError):
        speaker_similarity_score([])


def test_ss_self_identity_pairing(rng):
    embs = [emb(rng.normal(size=EMBED_DIM)) for _ in range(5)]
    assert speaker_similarity_score([(e, e) for e in embs]) == 1.0


def _contour(f0):
    f0 = np.asarray(f0, dtype=np.float64)
    return PitchContour(f0, f0 > 0, 320, 16000)


def test_toy_source_zero_inputs():
    p = _contour(np.zeros(4))
    out = toy_source_encode(p, emb(np.zeros(EMBED_DIM)), frames=4)
    assert out.shape == (4, 80)
    assert np.all(out == 0)


def test_toy_source_deterministic():
    p = _contour([100.0, 150.0, 200.0])
    s = emb(np.linspace(-1, 1, EMBED_DIM))
    a = toy_source_encode(p, s, frames=3)
    b = toy_source_encode(p, s, frames=3)
    assert np.array_equal(a, b)


def test_toy_source_linear_in_embedding():
    p = _contour(np.zeros(3))
    s = emb(np.linspace(-1, 1, EMBED_DIM))
    one = toy_source_encode(p, s, frames=3)
    two = toy_source_encode(p, emb(2 * s.values), frames=3)
    assert np.allclose(two, 2 * one)


def test_toy_filter_linear_and_deterministic(rng):
    content = MelSpectrogram(rng.normal(size=(5, 80)), 16000)
    s = emb(rng.normal(size=EMBED_DIM))
    a = toy_filter_encode(content, s)
    assert a.shape == (5, 80)
    assert np.array_equal(a, toy_filter_encode(content, s))
    zero_mel = MelSpectrogram(np.zeros((5, 80)), 16000)
    one = toy_filter_encode(zero_mel, s)
    two = toy_filter_encode(zero_mel, emb(2 * s.values))
    assert np.allclose(two, 2 * one)


def test_reconstruction_perfect():
    x = MelSpectrogram(np.ones((3, 80)), 16000)
    pair = SourceFilterPair(np.full((3, 80), 0.25), np.full((3, 80), 0.75))
    assert reconstruction_l1(x, pair) == 0.0


def test_reconstruction_hand_case():
    x = MelSpectrogram(np.array([[1.0, 0.0], [0.0, 1.0]]), 16000)
    pair = SourceFilterPair(np.zeros((2, 2)), np.zeros((2, 2)))
    assert reconstruction_l1(x, pair) == pytest.approx(0.5)


def test_reconstruction_homogeneity(rng):
    resid = rng.normal(size=(4, 80))
    x = MelSpectrogram(resid, 16000)
    zeros = SourceFilterPair(np.zeros((4, 80)), np.zeros((4, 80)))
    base = reconstruction_l1(x, zeros)
    x3 = MelSpectrogram(3 * resid, 16000)
    assert reconstruction_l1(x3, zeros) == pytest.approx(3 * base)


def test_reconstruction_shape_mismatch():
    x = MelSpectrogram(np.zeros((3, 80)), 16000)
    with pytest.raises(ValueError):
        reconstruction_l1(x, SourceFilterPair(np.zeros((2, 80)), np.zeros((2, 80))))


def test_pair_shape_validation():
    with pytest.raises(ValueError):
        SourceFilterPair(np.zeros((2, 80)), np.zeros((3, 80)))

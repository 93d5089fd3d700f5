import numpy as np
import pytest

from strev.audio_io import Waveform
from strev.pitch import PitchContour, contour_correlation, estimate_f0, normalize_f0
from strev.reversal import reverse_full
from tests.conftest import glide, tone


def _exhaustive_lag_oracle(x, sr, lo=50.0, hi=600.0):
    """Whole-signal normalized autocorrelation, best integer lag."""
    best_lag, best_r = 0, -np.inf
    for lag in range(int(round(sr / hi)), int(round(sr / lo)) + 1):
        a = x[:-lag]
        b = x[lag:]
        r = (a @ b) / np.sqrt((a @ a) * (b @ b))
        if r > best_r + 1e-3:
            best_r, best_lag = r, lag
    return sr / best_lag


@pytest.mark.parametrize("freq,lo,hi", [(220.0, 217, 223), (100.0, 98, 102)])
def test_tone_f0(freq, lo, hi):
    w = tone(freq)
    c = estimate_f0(w)
    med = np.median(c.f0[c.voiced])
    assert lo <= med <= hi
    oracle = _exhaustive_lag_oracle(w.samples, w.sample_rate)
    assert abs(med - oracle) < 4.0


def test_silence_all_unvoiced():
    c = estimate_f0(Waveform(np.zeros(16000) + 0.0, 16000))
    assert not c.voiced.any()
    assert np.all(c.f0 == 0)


def test_amplitude_invariance():
    w = tone(220.0)
    scaled = Waveform(0.01 * w.samples, w.sample_rate)
    a = estimate_f0(w)
    b = estimate_f0(scaled)
    assert np.allclose(a.f0, b.f0)
    assert np.array_equal(a.voiced, b.voiced)


def test_short_frame_rejected():
    with pytest.raises(ValueError):
        estimate_f0(tone(220.0), frame_ms=10.0)


def test_contour_invariants():
    with pytest.raises(ValueError):
        PitchContour(np.array([100.0, 0.0]), np.array([True, True]), 320, 16000)


def test_normalize_constant_contour_zeroes():
    c = PitchContour(np.full(5, 200.0), np.ones(5, dtype=bool), 320, 16000)
    assert np.allclose(normalize_f0(c), 0.0)


def test_normalize_hand_case():
    c = PitchContour(np.array([100.0, 400.0]), np.array([True, True]), 320, 16000)
    out = normalize_f0(c)
    assert out == pytest.approx([-1.0, 1.0])


def test_normalize_unvoiced_maps_to_zero():
    c = PitchContour(
        np.array([100.0, 0.0, 400.0]), np.array([True, False, True]), 320, 16000
    )
    assert normalize_f0(c)[1] == 0.0


def test_normalize_all_unvoiced_errors():
    c = PitchContour(np.zeros(4), np.zeros(4, dtype=bool), 320, 16000)
    with pytest.raises(ValueError):
        normalize_f0(c)


def test_correlation_self_and_negation():
    f0 = np.linspace(100, 200, 20)
    voiced = np.ones(20, dtype=bool)
    c = PitchContour(f0, voiced, 320, 16000)
    assert contour_correlation(c, c) == pytest.approx(1.0)
    neg = PitchContour(2 * f0.mean() - f0, voiced, 320, 16000)
    assert contour_correlation(c, neg) == pytest.approx(-1.0)


def test_ramp_vs_reverse_is_anticorrelated():
    f0 = np.linspace(100, 300, 10)
    voiced = np.ones(10, dtype=bool)
    a = PitchContour(f0, voiced, 320, 16000)
    b = PitchContour(f0[::-1].copy(), voiced, 320, 16000)
    assert contour_correlation(a, b) == pytest.approx(-1.0)


def test_correlation_requires_joint_voicing():
    a = PitchContour(np.array([100.0, 0.0]), np.array([True, False]), 320, 16000)
    b = PitchContour(np.array([0.0, 100.0]), np.array([False, True]), 320, 16000)
    with pytest.raises(ValueError):
        contour_correlation(a, b)


def test_reversed_glide_tracks_reversed_contour():
    w = glide(150.0, 280.0)
    fwd = estimate_f0(w)
    rev = estimate_f0(reverse_full(w))
    flipped = PitchContour(
        fwd.f0[::-1].copy(), fwd.voiced[::-1].copy(), fwd.hop, fwd.sample_rate
    )
    assert contour_correlation(rev, flipped) >= 0.95

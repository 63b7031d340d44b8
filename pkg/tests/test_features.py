import math
import struct

import numpy as np
import pytest
from scipy.fft import idct

from derivwin.errors import ConfigError, FormatError, SignalTooShort
from derivwin.features import (
    FeatureMatrix,
    MfccConfig,
    build_mel_filterbank,
    cepstra_from_power,
    deltas,
    extract,
    frame_signal,
    power_spectra,
    read_features,
    read_wav,
    write_features,
    write_wav,
)
from derivwin.windows import Base, WindowSpec


def mel(f):
    return 2595 * math.log10(1 + f / 700)


def inv_mel(m):
    return 700 * (10 ** (m / 2595) - 1)


def test_framing_one_second():
    frames = frame_signal(np.zeros(8000), MfccConfig())
    assert frames.shape == ((8000 - 160) // 80 + 1, 160) == (99, 160)


def test_framing_exact_frame_and_too_short():
    assert frame_signal(np.ones(160), MfccConfig()).shape == (1, 160)
    with pytest.raises(SignalTooShort):
        frame_signal(np.ones(159), MfccConfig())


def test_framing_hop(rng):
    x = rng.standard_normal(1000)
    frames = frame_signal(x, MfccConfig())
    np.testing.assert_array_equal(frames[3], x[240:400])


def test_config_validation():
    with pytest.raises(ConfigError):
        MfccConfig(frame_len=20.01)
    with pytest.raises(ConfigError):
        MfccConfig(num_ceps=20)
    with pytest.raises(ConfigError):
        MfccConfig(fft_size=128)
    with pytest.raises(ConfigError):
        MfccConfig(window=WindowSpec(length=200))
    assert MfccConfig(sample_rate=16000).window.length == 320
    assert MfccConfig().dim == 38


def test_filterbank_defaults():
    fb = build_mel_filterbank(MfccConfig())
    assert fb.weights.shape == (20, 257)
    assert np.all(np.diff(fb.center_freqs) > 0)
    assert fb.center_freqs[-1] < 4000
    assert np.all(fb.weights >= 0)
    np.testing.assert_allclose(fb.weights.max(axis=1), 1.0)
    # adjacent filters overlap
    assert np.all(np.sum((fb.weights[:-1] > 0) & (fb.weights[1:] > 0), axis=1) > 0)


def test_filterbank_two_filters():
    fb = build_mel_filterbank(MfccConfig(num_filters=2, num_ceps=1))
    top = mel(4000.0)
    expected = [inv_mel(top / 3), inv_mel(2 * top / 3)]
    np.testing.assert_allclose(fb.center_freqs, expected, rtol=1e-12)


def test_filterbank_coverage():
    cfg = MfccConfig()
    fb = build_mel_filterbank(cfg)
    freqs = np.arange(cfg.fft_size // 2 + 1) * cfg.sample_rate / cfg.fft_size
    inside = (freqs >= fb.center_freqs[0]) & (freqs <= fb.center_freqs[-1])
    total = fb.weights.sum(axis=0)
    for k in np.flatnonzero(inside):
        assert total[k] > 0, f"bin {k} uncovered"


def test_deltas_against_loop(rng):
    ceps = rng.standard_normal((12, 3))
    k_max = 2
    expected = np.zeros_like(ceps)
    for t in range(12):
        for k in range(1, k_max + 1):
            fwd = ceps[min(t + k, 11)]
            bwd = ceps[max(t - k, 0)]
            expected[t] += k * (fwd - bwd)
    expected /= 2 * (1 + 4)
    np.testing.assert_allclose(deltas(ceps, k_max), expected, rtol=1e-14)


def test_deltas_of_constant_are_zero():
    ceps = np.tile(np.arange(5.0), (9, 1))
    assert not np.any(deltas(ceps, 2))


def test_dct_orthonormal_round_trip(rng):
    from scipy.fft import dct

    v = rng.standard_normal((50, 20)) * 10
    back = idct(dct(v, type=2, norm="ortho", axis=1), type=2, norm="ortho", axis=1)
    np.testing.assert_allclose(back, v, rtol=1e-12, atol=1e-12 * np.abs(v).max())


def test_extract_shape(rng):
    fm = extract(rng.standard_normal(8000))
    assert (len(fm), fm.dim) == (99, 38)
    assert fm.config_digest


def test_extract_zero_signal():
    fm = extract(np.zeros(8000))
    assert np.all(fm.frames == fm.frames[0])
    assert not np.any(fm.frames[:, 19:])


@pytest.mark.parametrize("order", [0, 1, 2])
def test_extract_scale_invariance(rng, order):
    x = rng.standard_normal(8000)
    cfg = MfccConfig(window=WindowSpec(Base.HAMMING, order, 160))
    a = extract(x, cfg).frames
    b = extract(10 * x, cfg).frames
    np.testing.assert_allclose(b, a, atol=1e-9, rtol=0)


def test_extract_multitaper(rng):
    cfg = MfccConfig(window=WindowSpec(Base.MULTITAPER, 0, 160, tapers=6))
    fm = extract(rng.standard_normal(4000), cfg)
    assert fm.dim == 38 and np.all(np.isfinite(fm.frames))


def test_extract_deterministic(rng):
    x = rng.standard_normal(8000)
    assert extract(x).frames.tobytes() == extract(x.copy()).frames.tobytes()


def test_window_swap_only_changes_windowing(rng):
    frames = frame_signal(rng.standard_normal(4000), MfccConfig())
    cfg0 = MfccConfig(window=WindowSpec(Base.HAMMING, 0, 160))
    cfg2 = MfccConfig(window=WindowSpec(Base.HAMMING, 2, 160))
    power = power_spectra(frames, cfg0)
    assert np.array_equal(cepstra_from_power(power, cfg0), cepstra_from_power(power, cfg2))
    assert not np.allclose(power_spectra(frames, cfg2), power)


def test_extract_matches_manual_pipeline(rng):
    x = rng.standard_normal(2000)
    cfg = MfccConfig()
    emph = np.concatenate([[x[0]], x[1:] - 0.97 * x[:-1]])
    frames = frame_signal(emph, cfg) * np.hamming(160)
    power = np.abs(np.fft.rfft(frames, 512)) ** 2
    fb = build_mel_filterbank(cfg)
    log_e = np.log(np.maximum(power @ fb.weights.T, 1e-10))
    n = np.arange(20)
    basis = np.sqrt(2 / 20) * np.cos(np.pi * np.outer(np.arange(1, 20), 2 * n + 1) / 40)
    static = log_e @ basis.T
    np.testing.assert_allclose(extract(x, cfg).frames[:, :19], static, rtol=1e-9, atol=1e-9)


def test_vad_drops_silent_frames(rng):
    x = np.concatenate([rng.standard_normal(4000), 1e-6 * rng.standard_normal(4000)])
    full = extract(x)
    vad = extract(x, MfccConfig(vad_percentile=90))
    assert len(vad) < len(full)


def test_feature_file_round_trip(tmp_path, rng):
    fm = FeatureMatrix(rng.standard_normal((17, 38)).astype(np.float32), 10.0)
    write_features(fm, tmp_path / "a.mfc")
    back = read_features(tmp_path / "a.mfc")
    assert back.frames.tobytes() == fm.frames.tobytes()
    assert back.frame_shift == 10.0 and back.dim == 38


def test_feature_file_quantizes_float64(tmp_path, rng):
    fm = extract(rng.standard_normal(2000))
    write_features(fm, tmp_path / "a.mfc")
    back = read_features(tmp_path / "a.mfc")
    assert np.array_equal(back.frames, fm.quantized().frames)
    write_features(back, tmp_path / "b.mfc")
    assert (tmp_path / "a.mfc").read_bytes() == (tmp_path / "b.mfc").read_bytes()


def test_feature_file_layout(tmp_path):
    fm = FeatureMatrix(np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]), 10.0)
    write_features(fm, tmp_path / "a.mfc")
    raw = (tmp_path / "a.mfc").read_bytes()
    assert raw[:16] == b"MFC1" + struct.pack("<III", 2, 3, 10000)
    assert struct.unpack("<6f", raw[16:]) == (1.0, 2.0, 3.0, 4.0, 5.0, 6.0)


def test_feature_file_empty(tmp_path):
    fm = FeatureMatrix(np.empty((0, 38)), 10.0)
    write_features(fm, tmp_path / "e.mfc")
    back = read_features(tmp_path / "e.mfc")
    assert len(back) == 0 and back.dim == 38


def test_feature_file_errors(tmp_path, rng):
    fm = FeatureMatrix(rng.standard_normal((4, 38)), 10.0)
    path = tmp_path / "a.mfc"
    write_features(fm, path)
    raw = path.read_bytes()
    (tmp_path / "trunc.mfc").write_bytes(raw[:-3])
    with pytest.raises(FormatError):
        read_features(tmp_path / "trunc.mfc")
    (tmp_path / "magic.mfc").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(FormatError):
        read_features(tmp_path / "magic.mfc")
    (tmp_path / "short.mfc").write_bytes(raw[:10])
    with pytest.raises(FormatError):
        read_features(tmp_path / "short.mfc")
    with pytest.raises(OSError):
        read_features(tmp_path / "missing.mfc")


def test_wav_round_trip(tmp_path, rng):
    x = np.round(rng.uniform(-0.5, 0.5, 500) * 32768) / 32768
    write_wav(tmp_path / "a.wav", x, 8000)
    back, rate = read_wav(tmp_path / "a.wav")
    assert rate == 8000
    np.testing.assert_array_equal(back, x)

import math

import numpy as np
import pytest

from derivwin.errors import InvalidFftSize, InvalidLength, LengthMismatch
from derivwin.windows import (
    Base,
    Normalize,
    WindowSpec,
    apply_window,
    default_metrics_fft_size,
    make_window,
    window_metrics,
)


def hamming_point(n, length):
    return 0.54 - 0.46 * math.cos(2 * math.pi * n / (length - 1))


def test_hamming_order0_endpoint():
    w = make_window(WindowSpec(Base.HAMMING, 0, 160))
    assert w.samples[0] == pytest.approx(0.08, abs=1e-15)
    assert w.samples[-1] == pytest.approx(0.08, abs=1e-15)


def test_hamming_order0_matches_numpy():
    np.testing.assert_allclose(make_window(WindowSpec(length=160)).samples, np.hamming(160), atol=1e-15)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_derivative_window_starts_at_zero(order):
    assert make_window(WindowSpec(Base.HAMMING, order, 160)).samples[0] == 0.0


def test_order2_unit_peak_argmax_matches_direct_evaluation():
    # the taper falls to 0.08 at the far end, so the peak sits well inside the frame
    oracle = [n**2 * hamming_point(n, 160) for n in range(160)]
    expected = max(range(160), key=oracle.__getitem__)
    assert expected == 105
    w = make_window(WindowSpec(Base.HAMMING, 2, 160, Normalize.UNIT_PEAK))
    assert int(np.argmax(w.samples)) == expected
    assert w.samples.max() == 1.0


@pytest.mark.parametrize("base", [Base.HAMMING, Base.HANNING, Base.RECTANGULAR])
@pytest.mark.parametrize("order", [1, 2, 4])
def test_family_consistency(base, order):
    base_w = make_window(WindowSpec(base, 0, 97)).samples
    w = make_window(WindowSpec(base, order, 97)).samples
    n = np.arange(97, dtype=np.float64)
    assert np.array_equal(w, n**order * base_w)


def test_hanning_is_symmetric_form():
    np.testing.assert_allclose(make_window(WindowSpec(Base.HANNING, 0, 64)).samples, np.hanning(64), atol=1e-15)


def test_invalid_length():
    with pytest.raises(InvalidLength):
        WindowSpec(length=1)


def test_samples_are_read_only():
    w = make_window(WindowSpec())
    with pytest.raises(ValueError):
        w.samples[0] = 1.0


def test_apply_window_zero_frame():
    w = make_window(WindowSpec(Base.HAMMING, 1, 160))
    assert not np.any(apply_window(w, np.zeros(160)))


def test_apply_window_rectangular_is_identity(rng):
    frame = rng.standard_normal(160)
    np.testing.assert_array_equal(apply_window(make_window(WindowSpec(Base.RECTANGULAR, 0, 160)), frame), frame)


def test_apply_window_impulse():
    frame = np.zeros(160)
    frame[3] = 1.0
    out = apply_window(make_window(WindowSpec(Base.HAMMING, 1, 160)), frame)
    expected = 3 * (0.54 - 0.46 * math.cos(6 * math.pi / 159))
    assert out[3] == pytest.approx(expected, rel=1e-15)
    assert np.count_nonzero(out) == 1


def test_apply_window_length_mismatch():
    with pytest.raises(LengthMismatch):
        apply_window(make_window(WindowSpec(length=160)), np.zeros(159))


def test_default_grid():
    assert default_metrics_fft_size(160) == 4096
    assert default_metrics_fft_size(1000) == 8192


def test_metrics_fft_size_too_small():
    with pytest.raises(InvalidFftSize):
        window_metrics(make_window(WindowSpec(length=160)), 512)


def test_mainlobe_width_grows_with_order():
    widths = [window_metrics(make_window(WindowSpec(Base.HAMMING, k, 160))).mainlobe_width_3db for k in range(3)]
    assert widths[2] > widths[1] > widths[0]


@pytest.mark.parametrize("order", [0, 1, 2])
def test_metrics_invariant_under_unit_peak(order):
    plain = window_metrics(make_window(WindowSpec(Base.HAMMING, order, 160)))
    scaled = window_metrics(make_window(WindowSpec(Base.HAMMING, order, 160, Normalize.UNIT_PEAK)))
    assert scaled.leakage_factor == pytest.approx(plain.leakage_factor, rel=1e-9)
    assert scaled.relative_sidelobe_attenuation == pytest.approx(plain.relative_sidelobe_attenuation, abs=1e-9)
    assert scaled.mainlobe_width_3db == plain.mainlobe_width_3db


def test_rectangular_metrics_against_closed_form():
    # Dirichlet kernel: first sidelobe about -13.26 dB for long windows
    m = window_metrics(make_window(WindowSpec(Base.RECTANGULAR, 0, 160)), 160 * 64)
    assert m.relative_sidelobe_attenuation == pytest.approx(-13.26, abs=0.05)
    assert 0 <= m.leakage_factor < 1
    # -3 dB full width of the Dirichlet kernel is ~0.886 bins = 0.886*2/N in units of pi
    assert m.mainlobe_width_3db == pytest.approx(0.886 * 2 / 160, abs=2 * 2 / (160 * 64))


@pytest.mark.parametrize("base", [Base.HAMMING, Base.HANNING, Base.RECTANGULAR])
@pytest.mark.parametrize("order", [0, 1, 2])
def test_metric_ranges(base, order):
    m = window_metrics(make_window(WindowSpec(base, order, 128)))
    assert 0 <= m.leakage_factor < 1
    assert m.relative_sidelobe_attenuation < 0
    assert 0 < m.mainlobe_width_3db < 2

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from havok_intermittency.embedding import TimeSeries
from havok_intermittency.errors import SeriesTooShort, WindowOutOfRange, ZeroPower
from havok_intermittency.spectral import (
    amplitude_spectrum,
    cwt_morse,
    dominant_bandwidth,
    fft_forward,
    morse_efolding_time,
    morse_peak,
    morse_wavelet_hat,
    naive_dft,
    ridge_frequencies,
    windowed_spectra,
)


def test_fft_small_examples():
    np.testing.assert_allclose(fft_forward(np.ones(4)), [4, 0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(fft_forward(np.array([1.0, 0, -1, 0])), [0, 2, 0, 2], atol=1e-15)


@pytest.mark.parametrize("n", [8, 15, 97, 256])
def test_fft_matches_naive_dft(n):
    x = np.random.default_rng(n).standard_normal(n)
    ref = naive_dft(x)
    assert np.linalg.norm(fft_forward(x) - ref) / np.linalg.norm(ref) <= 1e-9


def test_fft_errors():
    with pytest.raises(SeriesTooShort):
        fft_forward(np.array([1.0]))


def test_bin_aligned_sinusoid():
    fs, n = 100.0, 1000
    t = np.arange(n) / fs
    spec = amplitude_spectrum(TimeSeries(3 * np.sin(2 * np.pi * 5 * t), dt=1 / fs))
    k = int(np.argmax(spec.amplitude))
    assert spec.freqs[k] == 5.0
    assert abs(spec.amplitude[k] - 3.0) <= 1e-9
    assert spec.freqs[-1] == fs / 2


def test_constant_signal_spectrum():
    spec = amplitude_spectrum(np.full(16, -2.5))
    assert spec.amplitude[0] == pytest.approx(2.5)
    np.testing.assert_allclose(spec.amplitude[1:], 0, atol=1e-14)
    with pytest.raises(ZeroPower):
        dominant_bandwidth(spec)


def test_hann_taper_amplitude():
    fs, n = 64.0, 1024
    t = np.arange(n) / fs
    spec = amplitude_spectrum(TimeSeries(2 * np.cos(2 * np.pi * 8 * t), dt=1 / fs), taper="hann")
    assert spec.amplitude.max() == pytest.approx(2.0, rel=1e-3)


def test_single_tone_band_collapses():
    fs, n = 50.0, 500
    t = np.arange(n) / fs
    spec = amplitude_spectrum(TimeSeries(np.sin(2 * np.pi * 7 * t), dt=1 / fs))
    assert dominant_bandwidth(spec) == (7.0, 7.0)


def test_two_tone_band():
    fs, n = 100.0, 1000
    t = np.arange(n) / fs
    x = np.sin(2 * np.pi * 1 * t) + np.sin(2 * np.pi * 10 * t)
    spec = amplitude_spectrum(TimeSeries(x, dt=1 / fs)).with_band(0.95)
    assert (spec.f_L, spec.f_H) == (1.0, 10.0)


def test_windowed_spectra():
    fs = 20.0
    t = np.arange(600) / fs
    x = np.where((t >= 10) & (t < 20), np.sin(2 * np.pi * 2 * t), 0.0)
    ts = TimeSeries(x, dt=1 / fs)
    whole = windowed_spectra(ts, [(0, 30)])[0]
    np.testing.assert_array_equal(whole.amplitude, amplitude_spectrum(ts).amplitude)
    specs = windowed_spectra(ts, [(0, 10), (10, 20), (20, 30)])
    peaks = [s.amplitude.max() for s in specs]
    assert peaks[1] == pytest.approx(1.0, abs=1e-9)
    assert peaks[0] < 1e-12 and peaks[2] < 1e-12
    with pytest.raises(WindowOutOfRange):
        windowed_spectra(ts, [(25, 40)])
    with pytest.raises(WindowOutOfRange):
        windowed_spectra(ts, [(1.0, 1.2)])


def test_morse_wavelet_peak_normalisation():
    gamma, beta = 3.0, 20.0
    wp = morse_peak(gamma, beta)
    assert wp == pytest.approx((beta / gamma) ** (1 / gamma))
    assert morse_wavelet_hat(np.array([wp]), gamma, beta)[0] == pytest.approx(2.0)
    w = np.linspace(0.01, 5, 5000)
    assert morse_wavelet_hat(w, gamma, beta).max() <= 2.0 + 1e-12
    # analytic: nothing at negative frequency
    assert np.all(morse_wavelet_hat(-w, gamma, beta) == 0)


def test_morse_efolding_positive():
    tau = morse_efolding_time(3.0, 20.0)
    assert 1.0 < tau < 20.0


def test_cwt_zero_signal():
    sc = cwt_morse(TimeSeries(np.zeros(128), dt=1.0))
    assert np.all(sc.modulus == 0)


def test_cwt_ridge_sinusoid():
    fs, n, f0 = 100.0, 2048, 5.0
    t = np.arange(n) / fs
    sc = cwt_morse(TimeSeries(np.sin(2 * np.pi * f0 * t), dt=1 / fs))
    assert np.all(np.diff(sc.freqs) < 0) and np.all(np.diff(sc.scales) > 0)
    assert sc.modulus.shape == (sc.freqs.size, n)
    ridge = ridge_frequencies(sc)
    # a ridge point is unaffected by the edges if f0 lies above the COI
    ok = sc.coi < f0
    assert ok.sum() > n // 2
    err = np.abs(ridge[ok] / f0 - 1)
    assert err.max() <= 2 ** (1 / 10) - 1
    mid = n // 2
    assert sc.modulus[:, mid].max() == pytest.approx(1.0, abs=0.02)


def test_cwt_too_short():
    with pytest.raises(SeriesTooShort):
        cwt_morse(np.ones(8))


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.integers(4, 300), elements=st.floats(-1e3, 1e3)))
def test_parseval_property(x):
    spec = amplitude_spectrum(x)
    v = fft_forward(x)
    lhs = np.sum(x**2)
    assert np.sum(np.abs(v) ** 2) / x.size == pytest.approx(lhs, rel=1e-9, abs=1e-9)
    assert spec.power.sum() * x.size == pytest.approx(lhs, rel=1e-9, abs=1e-9)
    assert np.all(spec.amplitude >= 0)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.integers(8, 200), elements=st.floats(-100, 100)),
       st.floats(0.05, 0.9), st.floats(0.01, 0.09))
def test_band_nesting_property(x, e1, de):
    spec = amplitude_spectrum(x)
    if not spec.power[1:].sum() > 0:
        return
    lo1, hi1 = dominant_bandwidth(spec, e1)
    lo2, hi2 = dominant_bandwidth(spec, e1 + de)
    assert lo1 <= hi1
    assert lo2 <= lo1 and hi1 <= hi2
    inband = (spec.freqs >= lo1) & (spec.freqs <= hi1)
    inband[0] = False
    assert spec.power[inband].sum() >= e1 * spec.power[1:].sum() * (1 - 1e-9)


@settings(max_examples=10, deadline=None)
@given(arrays(np.float64, 64, elements=st.floats(-10, 10)), st.sampled_from([-4.0, 0.5, 3.0]))
def test_cwt_linearity_property(x, c):
    a = cwt_morse(x).modulus
    b = cwt_morse(c * x).modulus
    np.testing.assert_allclose(b, abs(c) * a, rtol=1e-10, atol=1e-10 * max(a.max(), 1e-300))

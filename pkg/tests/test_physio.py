import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal

from havok_intermittency.errors import GapTooLong, InputError, InvalidBand, NoBeats
from havok_intermittency.intermittency import BurstAnalysis
from havok_intermittency.physio import (
    AnnotationTrack,
    EcgRecord,
    HrvFrame,
    RrSeries,
    analytic_bandpass_gain,
    bandpass_butterworth,
    burst_annotation_association,
    butterworth_sos,
    detect_rpeaks,
    feature_series,
    hrv_features,
    pnn50,
    rmssd,
    triangular_index,
)
from havok_intermittency.systems import synthetic_ecg

FS = 100.0


def _tone(f, fs=FS, seconds=20.0, amp=1.0):
    t = np.arange(int(seconds * fs)) / fs
    return amp * np.sin(2 * np.pi * f * t)


def _db(x):
    return 20 * np.log10(x)


def test_design_matches_analytic_magnitude():
    sos = butterworth_sos(FS, 0.5, 30.0, 5)
    f = np.array([0.2, 0.5, 1.0, 5.0, 10.0, 20.0, 30.0, 40.0, 45.0])
    _, h = signal.sosfreqz(sos, worN=f, fs=FS)
    np.testing.assert_allclose(np.abs(h), analytic_bandpass_gain(f, FS, 0.5, 30.0, 5), rtol=1e-6)
    # -3 dB at the edges, by construction of the prewarped design
    np.testing.assert_allclose(np.abs(h[[1, 6]]), 1 / np.sqrt(2), rtol=1e-6)


def test_passband_10hz_within_1db():
    out = bandpass_butterworth(EcgRecord(_tone(10.0), FS)).samples
    core = slice(200, -200)
    gain = np.std(out[core]) / np.std(_tone(10.0)[core])
    expected = analytic_bandpass_gain(10.0, FS, 0.5, 30.0, 5) ** 2  # two passes
    assert abs(_db(gain)) <= 1.0
    assert abs(_db(gain) - _db(expected)) <= 0.05


def test_stopband_dc_and_45hz():
    dc = bandpass_butterworth(EcgRecord(np.full(4000, 3.0), FS)).samples
    assert _db(np.max(np.abs(dc[1000:-1000])) / 3.0) <= -40
    hf = bandpass_butterworth(EcgRecord(_tone(45.0), FS)).samples
    assert _db(np.std(hf[200:-200]) / np.std(_tone(45.0))) <= -40
    assert _db(analytic_bandpass_gain(45.0, FS, 0.5, 30.0, 5) ** 2) <= -40


def test_invalid_band():
    for lo, hi in ((0.0, 30.0), (30.0, 10.0), (0.5, 50.0)):
        with pytest.raises(InvalidBand):
            butterworth_sos(FS, lo, hi, 5)


def test_zero_phase_no_lag():
    t = np.arange(2000) / FS
    template = np.exp(-0.5 * ((t - 10.0) / 0.02) ** 2)
    out = bandpass_butterworth(EcgRecord(template, FS)).samples
    xc = np.correlate(out, template, mode="full")
    assert np.argmax(xc) - (template.size - 1) == 0


def _match(detected, truth, tol=0.05):
    tp = sum(np.min(np.abs(detected - r)) <= tol for r in truth)
    hits = sum(np.min(np.abs(truth - d)) <= tol for d in detected)
    return tp / truth.size, hits / detected.size


@pytest.mark.parametrize("fs", [100.0, 250.0])
def test_rpeaks_synthetic(fs):
    x, fs, truth = synthetic_ecg(duration=600, fs=fs, rr=0.8, snr_db=20, seed=1)
    rr = detect_rpeaks(bandpass_butterworth(EcgRecord(x, fs)))
    sens, ppv = _match(rr.peak_times, truth)
    assert sens >= 0.99 and ppv >= 0.99
    nearest = np.array([truth[np.argmin(np.abs(truth - p))] for p in rr.peak_times])
    assert np.max(np.abs(rr.peak_times - nearest)) <= 0.020


def test_rpeaks_alternating_rhythm():
    x, fs, truth = synthetic_ecg(duration=120, fs=250, rr=[0.8, 0.82], snr_db=30, seed=2)
    rr = detect_rpeaks(bandpass_butterworth(EcgRecord(x, fs)))
    assert rr.rejected_count == 0
    np.testing.assert_allclose(rr.rr, np.diff(truth), atol=0.004)
    # alternates short/long
    assert np.all(np.sign(np.diff(rr.rr))[::2] == np.sign(np.diff(rr.rr))[0])


def test_rpeaks_flat_and_deterministic():
    with pytest.raises(NoBeats):
        detect_rpeaks(EcgRecord(np.zeros(5000), FS))
    x, fs, _ = synthetic_ecg(duration=60, fs=250, seed=4)
    ecg = bandpass_butterworth(EcgRecord(x, fs))
    a, b = detect_rpeaks(ecg), detect_rpeaks(ecg)
    assert np.array_equal(a.peak_times, b.peak_times)


def test_rr_validation_flags():
    peaks = np.cumsum([0.5] + [0.8] * 10 + [0.2] + [0.8] * 10 + [2.5] + [0.8] * 5)
    rr = RrSeries.from_peak_times(peaks)
    assert rr.rejected_count >= 2
    assert rr.rr[10] == pytest.approx(0.2) and rr.rr[21] == pytest.approx(2.5)
    assert not rr.valid[10] and not rr.valid[21]
    assert np.sum(rr.rr) == pytest.approx(peaks[-1] - peaks[0], abs=1e-12)
    with pytest.raises(NoBeats):
        RrSeries.from_peak_times([1.0])
    with pytest.raises(InputError):
        RrSeries.from_peak_times([1.0, 0.5, 2.0])


def test_triangular_index_examples():
    assert triangular_index(np.full(60, 0.8)) == 1.0
    rr = np.concatenate([np.full(40, 0.8), np.full(20, 0.9)])
    assert triangular_index(rr) == 1.5
    assert rmssd([0.8, 0.9, 0.8]) == pytest.approx(0.1)
    assert pnn50([0.8, 0.9, 0.8, 0.81]) == pytest.approx(2 / 3)


def test_hrv_features_windows():
    peaks = np.arange(0, 180.01, 0.75)
    frames = hrv_features(RrSeries.from_peak_times(peaks, duration=180.0))
    assert len(frames) == 3
    for f in frames:
        assert f.tri == 1.0 and f.mean_rr == pytest.approx(0.75)
        assert f.rmssd == pytest.approx(0.0, abs=1e-12) and f.mean_hr == pytest.approx(80.0)
    sparse = RrSeries.from_peak_times(np.array([0, 1, 2, 3, 60.5, 61.3, 62.1]), duration=120.0)
    assert all(not f.valid for f in hrv_features(sparse))


def _frames(values):
    return [HrvFrame(minute_index=i, n_beats=60, tri=v) for i, v in enumerate(values)]


def test_feature_series_examples():
    ts = feature_series(_frames([1.0, 2.0, 3.0]))
    np.testing.assert_array_equal(ts.values, [1, 2, 3])
    assert ts.dt == 60.0
    ts = feature_series(_frames([1.0, None, 3.0]))
    np.testing.assert_array_equal(ts.values, [1, 2, 3])
    with pytest.raises(GapTooLong):
        feature_series(_frames([1.0, None, None, None, None, None, 3.0]))
    with pytest.raises(InputError):
        feature_series(_frames([1.0, 2.0]), feature="lf_hf")


def _bursts(intervals, n_samples=100):
    t = np.array(intervals, dtype=float).reshape(-1, 2)
    return BurstAnalysis(0.1, 0.0, t[:, 0], t[:, 1], 0.0, 0.0, 60.0, 0.0, n_samples, None)


def test_association_perfect_and_empty():
    labels = ["N", "A", "A", "N", "A", "N", "N"]
    ann = AnnotationTrack(labels)
    res = burst_annotation_association(_bursts([[60, 180], [240, 300]]), ann)
    assert res["overlap_fraction"] == 1.0
    assert res["point_biserial_r"] == pytest.approx(1.0)
    res = burst_annotation_association(_bursts([]), ann)
    assert res["overlap_fraction"] == 0.0 and res["point_biserial_r"] is None
    assert res["reason"]
    with pytest.raises(InputError):
        AnnotationTrack(["N", "X"])


def test_association_permutation_null():
    rng = np.random.default_rng(0)
    n = 480
    labels = np.array(["N"] * n)
    labels[rng.choice(n, 120, replace=False)] = "A"
    starts = np.sort(rng.choice(n, 100, replace=False)) * 60.0
    bursts = _bursts(np.column_stack([starts, starts + 30.0]))
    res = burst_annotation_association(bursts, AnnotationTrack(list(rng.permutation(labels))))
    assert abs(res["point_biserial_r"]) <= 0.1


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.35, 1.8), min_size=2, max_size=200))
def test_rr_tiling_and_tri_property(intervals):
    peaks = np.concatenate([[0.0], np.cumsum(intervals)])
    rr = RrSeries.from_peak_times(peaks)
    assert np.all(rr.rr > 0)
    assert np.sum(rr.rr) == pytest.approx(peaks[-1] - peaks[0], rel=1e-12)
    tri = triangular_index(rr.rr)
    assert tri >= 1.0
    bins = np.floor(rr.rr * 128 + 1e-9)
    assert (tri == 1.0) == (np.unique(bins).size == 1)


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 30), st.floats(0.5, 1.2))
def test_feature_series_length_property(minutes, rr_s):
    peaks = np.arange(0, minutes * 60 + 1e-9, rr_s)
    frames = hrv_features(RrSeries.from_peak_times(peaks, duration=minutes * 60.0))
    ts = feature_series(frames)
    assert len(ts) == minutes and ts.dt == 60.0

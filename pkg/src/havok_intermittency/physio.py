"""ECG to heart-rate-variability front end.

ECG -> Butterworth band-pass -> R peaks -> RR intervals -> per-minute HRV
features -> one feature as an evenly sampled series. Also relates detected
forcing bursts to per-minute apnea annotations.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import signal

from .embedding import TimeSeries
from .errors import GapTooLong, InputError, InsufficientData, InvalidBand, NoBeats, NonFinite
from .intermittency import pearson_test

HRV_FEATURES = ("tri", "mean_rr", "sdnn", "rmssd", "pnn50", "mean_hr")


@dataclass(frozen=True)
class EcgRecord:
    samples: np.ndarray
    fs: float
    record_id: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if not self.fs > 0:
            raise InputError(f"fs must be positive, got {self.fs}")
        if not np.all(np.isfinite(samples)):
            raise NonFinite("ECG contains NaN or Inf")
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self):
        return self.samples.size / self.fs


@dataclass(frozen=True)
class RrSeries:
    """Beat times and the intervals between them.

    ``rr[k] = peak_times[k + 1] - peak_times[k]``. Intervals failing the
    plausibility checks stay in ``rr`` (so the intervals still tile the
    record) but are flagged ``False`` in ``valid``.
    """

    peak_times: np.ndarray
    rr: np.ndarray
    valid: np.ndarray
    duration: float

    @classmethod
    def from_peak_times(cls, peak_times, duration=None, validate=True):
        peak_times = np.asarray(peak_times, dtype=float)
        if peak_times.size < 2:
            raise NoBeats(f"need at least 2 beats, found {peak_times.size}")
        if np.any(np.diff(peak_times) <= 0):
            raise InputError("peak times must be strictly increasing")
        rr = np.diff(peak_times)
        valid = validate_rr(rr) if validate else np.ones(rr.size, dtype=bool)
        if duration is None:
            duration = float(peak_times[-1])
        return cls(peak_times=peak_times, rr=rr, valid=valid, duration=float(duration))

    @property
    def rejected_count(self):
        return int(np.count_nonzero(~self.valid))


@dataclass(frozen=True)
class AnnotationTrack:
    minute_labels: list
    t0: float = 0.0
    epoch: float = 60.0

    def __post_init__(self):
        labels = [str(x).strip().upper() for x in self.minute_labels]
        bad = sorted(set(labels) - {"N", "A"})
        if bad:
            raise InputError(f"annotation labels must be N or A, got {bad}")
        object.__setattr__(self, "minute_labels", labels)

    def indicator(self):
        return np.array([lab == "A" for lab in self.minute_labels], dtype=float)


@dataclass
class HrvFrame:
    minute_index: int
    n_beats: int
    tri: Optional[float] = None
    mean_rr: Optional[float] = None
    sdnn: Optional[float] = None
    rmssd: Optional[float] = None
    pnn50: Optional[float] = None
    mean_hr: Optional[float] = None  # beats per minute
    extra: dict = field(default_factory=dict)

    @property
    def valid(self):
        return self.tri is not None


# --- filtering ----------------------------------------------------------------


def butterworth_sos(fs, low=0.5, high=30.0, order=5):
    if not 0 < low < high < fs / 2:
        raise InvalidBand(f"need 0 < low < high < fs/2; got low={low}, high={high}, fs={fs}")
    # scipy designs digital Butterworth filters by the bilinear transform
    # with pre-warped band edges
    return signal.butter(order, [low, high], btype="bandpass", fs=fs, output="sos")


def analytic_bandpass_gain(f, fs, low, high, order):
    """Magnitude of the bilinear-transformed Butterworth band-pass at ``f`` Hz.

    Closed form of the low-pass prototype ``1 / sqrt(1 + x^(2 order))`` under
    the band-pass substitution on pre-warped frequencies.
    """
    f = np.asarray(f, dtype=float)
    w = np.tan(np.pi * f / fs)
    wl, wh = np.tan(np.pi * low / fs), np.tan(np.pi * high / fs)
    with np.errstate(divide="ignore"):
        x = (w**2 - wl * wh) / (w * (wh - wl))
    return 1.0 / np.sqrt(1.0 + x ** (2 * order))


def bandpass_butterworth(ecg, low=0.5, high=30.0, order=5, zero_phase=True):
    sos = butterworth_sos(ecg.fs, low, high, order)
    if zero_phase:
        out = signal.sosfiltfilt(sos, ecg.samples)
    else:
        out = signal.sosfilt(sos, ecg.samples)
    return EcgRecord(out, ecg.fs, ecg.record_id)


# --- R-peak detection -----------------------------------------------------------


def _qrs_energy(x, fs, integration=0.150):
    # five-point derivative, centred so it adds no delay
    kernel = np.array([1.0, 2.0, 0.0, -2.0, -1.0]) * fs / 8.0
    deriv = np.convolve(x, kernel, mode="same")
    w = max(int(round(integration * fs)), 1)
    mwi = np.convolve(deriv**2, np.ones(w) / w, mode="same")
    return deriv, mwi


def _pick_qrs(mwi, deriv, fs, refractory):
    """Adaptive dual-threshold classification of integrated-energy peaks."""
    refr = max(int(round(refractory * fs)), 1)
    cand, _ = signal.find_peaks(mwi, distance=refr)
    if cand.size == 0:
        return np.array([], dtype=int)
    learn = mwi[: int(2 * fs)] if mwi.size > 2 * fs else mwi
    spk = 0.5 * learn.max()
    npk = 0.5 * np.mean(learn)
    slope_win = int(round(0.075 * fs))
    qrs = []
    qrs_slopes = []
    pending = []  # candidates below threshold 1 since the last QRS

    def slope(i):
        lo, hi = max(i - slope_win, 0), min(i + slope_win + 1, deriv.size)
        return np.max(np.abs(deriv[lo:hi]))

    for i in cand:
        thr1 = npk + 0.25 * (spk - npk)
        thr2 = 0.5 * thr1
        if qrs and len(qrs) >= 2:
            recent = np.diff(qrs[-9:])
            rr_mean = recent.mean()
            if i - qrs[-1] > 1.66 * rr_mean and pending:
                # search back for the best sub-threshold candidate
                best = max(pending, key=lambda j: mwi[j])
                if mwi[best] > thr2 and best - qrs[-1] >= refr:
                    qrs.append(best)
                    qrs_slopes.append(slope(best))
                    spk = 0.25 * mwi[best] + 0.75 * spk
                pending = []
        if mwi[i] > thr1 and (not qrs or i - qrs[-1] >= refr):
            s = slope(i)
            if qrs and i - qrs[-1] < int(0.36 * fs) and s < 0.5 * qrs_slopes[-1]:
                npk = 0.125 * mwi[i] + 0.875 * npk  # T wave
                continue
            qrs.append(i)
            qrs_slopes.append(s)
            spk = 0.125 * mwi[i] + 0.875 * spk
            pending = []
        else:
            npk = 0.125 * mwi[i] + 0.875 * npk
            pending.append(i)
    return np.array(sorted(qrs), dtype=int)


def _refine(x, idx, fs, search=0.1):
    """Move each detection to the largest |x| nearby, with parabolic sub-sample fit."""
    half = max(int(round(search * fs)), 1)
    ref = x - np.median(x)
    out = []
    for i in idx:
        lo, hi = max(i - half, 0), min(i + half + 1, x.size)
        k = lo + int(np.argmax(np.abs(ref[lo:hi])))
        offset = 0.0
        if 0 < k < x.size - 1:
            a, b, c = np.abs(ref[k - 1 : k + 2])
            denom = a - 2 * b + c
            if denom != 0:
                offset = float(np.clip(0.5 * (a - c) / denom, -0.5, 0.5))
        out.append(k + offset)
    return np.array(out)


def validate_rr(rr, lo=0.3, hi=2.0, max_dev=0.2, span=5):
    """Flag intervals outside ``[lo, hi]`` or off their local median by > ``max_dev``."""
    rr = np.asarray(rr, dtype=float)
    ok = (rr >= lo) & (rr <= hi)
    half = span // 2
    valid = ok.copy()
    for k in np.flatnonzero(ok):
        window = rr[max(k - half, 0) : k + half + 1]
        window = window[(window >= lo) & (window <= hi)]
        med = np.median(window)
        valid[k] = abs(rr[k] - med) <= max_dev * med
    return valid


def detect_rpeaks(ecg, integration=0.150, refractory=0.200):
    """R-peak times of a filtered ECG (derivative, squaring, integration, thresholds).

    Returns an :class:`RrSeries`; raises :class:`NoBeats` with fewer than two
    detected beats.
    """
    x = ecg.samples
    if x.size < 2 or np.ptp(x) == 0:
        raise NoBeats("flat ECG: no beats detected")
    deriv, mwi = _qrs_energy(x, ecg.fs, integration)
    idx = _pick_qrs(mwi, deriv, ecg.fs, refractory)
    if idx.size < 2:
        raise NoBeats(f"found {idx.size} beats; need at least 2")
    pos = _refine(x, idx, ecg.fs)
    # refinement can pull two detections onto the same complex
    keep = np.concatenate(([True], np.diff(pos) >= refractory * ecg.fs))
    pos = pos[keep]
    if pos.size < 2:
        raise NoBeats("fewer than 2 beats after refinement")
    return RrSeries.from_peak_times(pos / ecg.fs, duration=ecg.duration)


# --- HRV features -------------------------------------------------------------------


def triangular_index(rr, binwidth=1.0 / 128):
    """Number of intervals over the height of the tallest histogram bin."""
    rr = np.asarray(rr, dtype=float)
    if rr.size == 0:
        return None
    bins = np.floor(rr / binwidth + 1e-9).astype(np.int64)
    counts = np.unique(bins, return_counts=True)[1]
    return rr.size / counts.max()


def rmssd(rr):
    d = np.diff(np.asarray(rr, dtype=float))
    return float(np.sqrt(np.mean(d**2)))


def pnn50(rr):
    d = np.abs(np.diff(np.asarray(rr, dtype=float)))
    return float(np.mean(d > 0.05))


def hrv_features(rr, window=60.0, tri_binwidth=1.0 / 128, min_beats=8):
    """Per-window HRV features; windows with fewer than ``min_beats`` valid intervals are null."""
    n_windows = int(np.floor(rr.duration / window + 1e-9))
    end_times = rr.peak_times[1:]
    frames = []
    for m in range(n_windows):
        sel = (end_times >= m * window) & (end_times < (m + 1) * window) & rr.valid
        x = rr.rr[sel]
        frame = HrvFrame(minute_index=m, n_beats=int(x.size))
        if x.size >= min_beats:
            frame.tri = float(triangular_index(x, tri_binwidth))
            frame.mean_rr = float(x.mean())
            frame.sdnn = float(x.std(ddof=1))
            frame.rmssd = rmssd(x)
            frame.pnn50 = pnn50(x)
            frame.mean_hr = float(60.0 / x.mean())
        frames.append(frame)
    return frames


def feature_series(frames, feature="tri", max_gap=3, window=60.0, min_valid=2):
    """Turn per-window features into an evenly sampled series.

    Null runs up to ``max_gap`` windows long are filled by linear
    interpolation (nearest value at the ends); longer runs raise
    :class:`GapTooLong`.
    """
    if feature not in HRV_FEATURES:
        raise InputError(f"unknown feature {feature!r}; choose from {HRV_FEATURES}")
    values = np.array(
        [np.nan if getattr(f, feature) is None else getattr(f, feature) for f in frames],
        dtype=float,
    )
    good = np.isfinite(values)
    if np.count_nonzero(good) < min_valid:
        raise InsufficientData(f"only {np.count_nonzero(good)} valid windows")
    edges = np.diff(np.concatenate(([0], (~good).astype(np.int8), [0])))
    run_lengths = np.flatnonzero(edges == -1) - np.flatnonzero(edges == 1)
    if run_lengths.size and run_lengths.max() > max_gap:
        raise GapTooLong(f"{run_lengths.max()} consecutive empty windows (max {max_gap})")
    idx = np.arange(values.size)
    filled = np.interp(idx, idx[good], values[good])
    t0 = frames[0].minute_index * window if frames else 0.0
    return TimeSeries(filled, dt=window, t0=t0, label=feature)


# --- association with annotations ---------------------------------------------------


def burst_annotation_association(bursts, ann):
    """Overlap of bursts with 'A' minutes and point-biserial correlation.

    ``overlap_fraction`` is the share of bursts touching at least one 'A'
    minute. The correlation is Pearson's r between a per-minute indicator
    (any burst inside the minute) and the A/N label.
    """
    labels = ann.indicator()
    n = labels.size
    starts = ann.t0 + ann.epoch * np.arange(n)
    ends = starts + ann.epoch
    t_s, t_e = np.asarray(bursts.t_s), np.asarray(bursts.t_e)
    # overlap[k, m]: burst k intersects minute m
    overlap = (t_s[:, None] < ends[None, :]) & (t_e[:, None] > starts[None, :])
    result = {"overlap_fraction": 0.0, "point_biserial_r": None, "p_value": None, "reason": None}
    if t_s.size == 0:
        result["reason"] = "no bursts detected"
        return result
    result["overlap_fraction"] = float(np.mean(np.any(overlap & (labels[None, :] > 0), axis=1)))
    active = np.any(overlap, axis=0).astype(float)
    if n < 3:
        result["reason"] = "fewer than 3 annotated minutes"
    elif np.ptp(active) == 0:
        result["reason"] = "burst indicator is constant over the annotated minutes"
    elif np.ptp(labels) == 0:
        result["reason"] = "annotation labels are constant"
    else:
        test = pearson_test(active, labels)
        result["point_biserial_r"] = test["r"]
        result["p_value"] = test["p_value"]
    return result

"""Fourier and wavelet views of the forcing signal.

Amplitude spectra are single-sided: a real sinusoid of amplitude ``A``
shows up as ``A`` at its frequency. ``power`` is scaled so it sums to the
mean square of the signal (Parseval).

The continuous wavelet transform uses the analytic generalized Morse
wavelet, evaluated in the frequency domain.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .embedding import TimeSeries
from .errors import InputError, NonFinite, SeriesTooShort, WindowOutOfRange, ZeroPower


def fft_forward(x):
    """DFT ``X_k = sum_t x_t exp(-2 pi i k t / n)`` for any length ``n``."""
    x = np.asarray(x)
    if x.ndim != 1 or x.size < 2:
        raise SeriesTooShort("fft_forward needs a 1-D array with at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise NonFinite("input contains NaN or Inf")
    return np.fft.fft(x)


def naive_dft(x):
    """O(n^2) reference DFT."""
    x = np.asarray(x)
    n = x.size
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ x


@dataclass(frozen=True)
class SpectrumResult:
    freqs: np.ndarray
    amplitude: np.ndarray
    power: np.ndarray
    n: int
    fs: float
    f_L: float = None
    f_H: float = None
    energy_fraction: float = None

    def with_band(self, energy_fraction=0.95):
        f_L, f_H = dominant_bandwidth(self, energy_fraction)
        return SpectrumResult(
            self.freqs, self.amplitude, self.power, self.n, self.fs, f_L, f_H, energy_fraction
        )


def _as_series(x, dt=None):
    if isinstance(x, TimeSeries):
        return x
    return TimeSeries(np.asarray(x, dtype=float), dt=1.0 if dt is None else dt)


def amplitude_spectrum(x, dt=None, taper=None):
    """Single-sided amplitude spectrum on ``k * fs / n`` for ``k <= n // 2``.

    ``taper="hann"`` applies a Hann window before transforming; amplitudes
    are then divided by the window's coherent gain.
    """
    ts = _as_series(x, dt)
    values = ts.values
    n = values.size
    if n < 4:
        raise SeriesTooShort(f"need at least 4 samples, got {n}")
    gain = 1.0
    if taper == "hann":
        w = np.hanning(n)
        values = values * w
        gain = w.mean()
    elif taper is not None:
        raise InputError(f"unknown taper {taper!r}")
    spec = fft_forward(values)[: n // 2 + 1]
    mag = np.abs(spec) / n
    # interior bins carry the mirrored negative-frequency half as well
    fold = np.full(mag.size, 2.0)
    fold[0] = 1.0
    if n % 2 == 0:
        fold[-1] = 1.0
    amplitude = fold * mag / gain
    power = fold * mag**2
    freqs = np.arange(mag.size) * ts.fs / n
    return SpectrumResult(freqs=freqs, amplitude=amplitude, power=power, n=n, fs=ts.fs)


def dominant_bandwidth(spec, energy_fraction=0.95):
    """Band ``[f_L, f_H]`` left after trimming equal power tails.

    The DC bin is excluded. ``f_L`` is the first frequency where the
    cumulative power reaches ``(1 - energy_fraction) / 2`` of the total and
    ``f_H`` the first where it reaches ``1 - (1 - energy_fraction) / 2``.
    """
    if not 0 < energy_fraction < 1:
        raise InputError(f"energy_fraction must lie in (0, 1), got {energy_fraction}")
    power = np.asarray(spec.power[1:], dtype=float)
    freqs = np.asarray(spec.freqs[1:], dtype=float)
    total = power.sum()
    if not total > 0:
        raise ZeroPower("no power outside the DC bin")
    cum = np.cumsum(power) / total
    tail = 0.5 * (1.0 - energy_fraction)
    eps = 1e-12
    i_lo = int(np.searchsorted(cum, tail - eps, side="left"))
    i_hi = int(np.searchsorted(cum, 1.0 - tail - eps, side="left"))
    i_hi = min(i_hi, freqs.size - 1)
    return float(freqs[i_lo]), float(freqs[i_hi])


def windowed_spectra(x, windows, taper=None):
    """Amplitude spectra of the segments ``[t_a, t_b)`` of ``x``."""
    ts = _as_series(x)
    out = []
    for t_a, t_b in windows:
        i0 = int(round((t_a - ts.t0) / ts.dt))
        i1 = int(round((t_b - ts.t0) / ts.dt))
        if i0 < 0 or i1 > len(ts) or i1 <= i0:
            raise WindowOutOfRange(f"window [{t_a}, {t_b}) outside the series")
        if i1 - i0 < 8:
            raise WindowOutOfRange(f"window [{t_a}, {t_b}) holds fewer than 8 samples")
        seg = TimeSeries(ts.values[i0:i1], dt=ts.dt, t0=ts.t0 + i0 * ts.dt)
        out.append(amplitude_spectrum(seg, taper=taper))
    return out


# --- generalized Morse wavelet ------------------------------------------------


def morse_peak(gamma, beta):
    """Peak radian frequency ``(beta / gamma) ** (1 / gamma)``."""
    return (beta / gamma) ** (1.0 / gamma)


def morse_wavelet_hat(omega, gamma=3.0, beta=20.0):
    """Frequency response ``2 (omega / omega_p)^beta exp(omega_p^gamma - omega^gamma)``.

    Zero for ``omega <= 0``; equals 2 at the peak frequency. Computed in
    log space so large ``beta`` does not overflow.
    """
    omega = np.asarray(omega, dtype=float)
    wp = morse_peak(gamma, beta)
    out = np.zeros_like(omega)
    pos = omega > 0
    w = omega[pos]
    out[pos] = 2.0 * np.exp(beta * np.log(w / wp) - w**gamma + wp**gamma)
    return out


@lru_cache(maxsize=32)
def morse_efolding_time(gamma, beta, n_grid=1 << 16):
    """Half-width (unit scale) at which ``|psi(t)|`` falls to ``|psi(0)| / e``."""
    wp = morse_peak(gamma, beta)
    # wavelet support in frequency is well inside [0, 20 wp]; choose the
    # time step to resolve it and the span to hold the full envelope
    dw = 20.0 * wp / (n_grid // 2)
    omega = np.fft.fftfreq(n_grid, d=1.0 / (n_grid * dw))
    psi = np.fft.ifft(morse_wavelet_hat(omega, gamma, beta))
    env = np.abs(np.fft.fftshift(psi))
    t = (np.arange(n_grid) - n_grid // 2) * (2 * np.pi / (n_grid * dw))
    center = n_grid // 2
    target = env[center] / np.e
    right = env[center:]
    k = int(np.argmax(right < target))
    # linear interpolation between the bracketing grid points
    e0, e1 = right[k - 1], right[k]
    frac = (e0 - target) / (e0 - e1)
    return float(t[center + k - 1] + frac * (t[center + k] - t[center + k - 1]))


@dataclass(frozen=True)
class Scalogram:
    scales: np.ndarray
    freqs: np.ndarray
    times: np.ndarray
    coefficients: np.ndarray
    gamma: float
    time_bandwidth: float
    coi: np.ndarray

    @property
    def modulus(self):
        return np.abs(self.coefficients)

    def inside_coi(self):
        """Boolean mask (scales x times) of coefficients affected by the edges."""
        return self.freqs[:, None] < self.coi[None, :]


def cwt_morse(x, gamma=3.0, time_bandwidth=60.0, voices_per_octave=10, dt=None, f_min=None):
    """Continuous wavelet transform with the analytic generalized Morse wavelet.

    For every scale ``a`` the coefficients are
    ``IDFT( DFT(x) * conj(Psi_hat(a * omega)) )`` with the peak-2
    normalization, so a sinusoid of amplitude ``A`` yields a ridge modulus
    close to ``A``. Scales are log-spaced with ``voices_per_octave`` voices
    and cover frequencies from Nyquist down to ``f_min`` (default
    ``2 / (n * dt)``).
    """
    ts = _as_series(x, dt)
    n = len(ts)
    if n < 16:
        raise SeriesTooShort(f"CWT needs at least 16 samples, got {n}")
    if gamma <= 0 or time_bandwidth <= 0 or voices_per_octave < 1:
        raise InputError("gamma, time_bandwidth and voices_per_octave must be positive")
    beta = time_bandwidth / gamma
    wp = morse_peak(gamma, beta)
    f_max = 0.5 * ts.fs
    f_min = 2.0 / (n * ts.dt) if f_min is None else f_min
    n_scales = int(np.floor(voices_per_octave * np.log2(f_max / f_min))) + 1
    freqs = f_max * 2.0 ** (-np.arange(n_scales) / voices_per_octave)
    scales = wp / (2 * np.pi * freqs)
    omega = 2 * np.pi * np.fft.fftfreq(n, d=ts.dt)
    spectrum = np.fft.fft(ts.values)
    # Psi_hat is real, so conjugation is a no-op
    filters = morse_wavelet_hat(scales[:, None] * omega[None, :], gamma, beta)
    coefficients = np.fft.ifft(spectrum[None, :] * filters, axis=1)

    tau_e = morse_efolding_time(float(gamma), float(beta))
    times = ts.times
    edge = np.minimum(np.arange(n), np.arange(n)[::-1]) * ts.dt
    with np.errstate(divide="ignore"):
        coi = np.where(edge > 0, wp * tau_e / (2 * np.pi * edge), np.inf)
    return Scalogram(
        scales=scales,
        freqs=freqs,
        times=times,
        coefficients=coefficients,
        gamma=float(gamma),
        time_bandwidth=float(time_bandwidth),
        coi=coi,
    )


def ridge_frequencies(scalogram):
    """Frequency of maximal modulus at every time."""
    return scalogram.freqs[np.argmax(scalogram.modulus, axis=0)]

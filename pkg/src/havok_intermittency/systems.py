"""Synthetic generators with known ground truth.

* Lorenz-63 integrated with fixed-step classical RK4; its x component is the
  canonical HAVOK test measurement.
* Bursty signals: Gaussian noise plus sinusoidal bursts on known intervals.
* Synthetic ECG: Gaussian QRS templates at known beat times.
"""

from dataclasses import dataclass, field

import numpy as np

from .embedding import TimeSeries
from .errors import InputError, NonFinite, OverlapError


@dataclass
class LorenzConfig:
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    x0: tuple = (-8.0, 8.0, 27.0)
    dt: float = 0.001
    n_steps: int = 10000

    def __post_init__(self):
        if not self.dt > 0:
            raise InputError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 1:
            raise InputError(f"n_steps must be >= 1, got {self.n_steps}")
        if len(self.x0) != 3:
            raise InputError("x0 must have three components")


def integrate_lorenz(cfg):
    """Integrate Lorenz-63 with RK4 at fixed step ``cfg.dt``.

    Returns a dict with ``t``, ``x``, ``y``, ``z`` arrays of length
    ``n_steps + 1`` (initial state included).
    """
    s, r, b = float(cfg.sigma), float(cfg.rho), float(cfg.beta)
    h = float(cfg.dt)
    h2, h6 = h / 2.0, h / 6.0
    n = int(cfg.n_steps)
    out = np.empty((n + 1, 3))
    x, y, z = (float(v) for v in cfg.x0)
    out[0] = x, y, z
    # scalar loop: for 3 states plain floats beat numpy per-step overhead
    for k in range(1, n + 1):
        k1x = s * (y - x)
        k1y = x * (r - z) - y
        k1z = x * y - b * z
        xa, ya, za = x + h2 * k1x, y + h2 * k1y, z + h2 * k1z
        k2x = s * (ya - xa)
        k2y = xa * (r - za) - ya
        k2z = xa * ya - b * za
        xa, ya, za = x + h2 * k2x, y + h2 * k2y, z + h2 * k2z
        k3x = s * (ya - xa)
        k3y = xa * (r - za) - ya
        k3z = xa * ya - b * za
        xa, ya, za = x + h * k3x, y + h * k3y, z + h * k3z
        k4x = s * (ya - xa)
        k4y = xa * (r - za) - ya
        k4z = xa * ya - b * za
        x += h6 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y += h6 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        z += h6 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        out[k] = x, y, z
        if not (abs(x) < 1e8 and abs(y) < 1e8 and abs(z) < 1e8):
            raise NonFinite(f"Lorenz integration blew up at step {k}; reduce dt")
    return {"t": h * np.arange(n + 1), "x": out[:, 0], "y": out[:, 1], "z": out[:, 2]}


def lorenz_measurement(duration=200.0, dt=0.001, burn_in=10.0, x0=(-8.0, 8.0, 27.0)):
    """x component of a Lorenz run after discarding ``burn_in`` time units.

    Returns ``(series, states)`` where ``states`` holds the post-burn-in
    trajectory (same time base as ``series``).
    """
    n_burn = int(round(burn_in / dt))
    n_keep = int(round(duration / dt))
    traj = integrate_lorenz(LorenzConfig(x0=tuple(x0), dt=dt, n_steps=n_burn + n_keep - 1))
    states = {k: v[n_burn:] for k, v in traj.items()}
    states["t"] = states["t"] - states["t"][0]
    return TimeSeries(states["x"].copy(), dt=dt, label="lorenz-x"), states


def lobe_switch_times(x, dt, smooth=0.5):
    """Times where the moving-averaged x component changes sign."""
    x = np.asarray(x, dtype=float)
    w = max(int(round(smooth / dt)), 1)
    smoothed = np.convolve(x, np.ones(w) / w, mode="same")
    sign = np.sign(smoothed)
    # edges where the 'same' convolution sees zero padding are unreliable
    half = w // 2
    idx = np.flatnonzero(sign[1:] * sign[:-1] < 0) + 1
    idx = idx[(idx > half) & (idx < x.size - half)]
    return idx * dt


# modulation depth of the burst carrier; < 1 keeps bursts away from zero
CARRIER_DEPTH = 0.5


@dataclass
class Burst:
    t_s: float
    t_e: float
    amplitude: float = 1.0
    carrier_freq_hz: float = 1.0


@dataclass
class SyntheticBurstConfig:
    duration: float = 60.0
    dt: float = 0.01
    noise_sd: float = 0.0
    bursts: list = field(default_factory=list)
    seed: int = 0

    def __post_init__(self):
        self.bursts = [b if isinstance(b, Burst) else Burst(**b) for b in self.bursts]
        ordered = sorted(self.bursts, key=lambda b: b.t_s)
        for b in ordered:
            if not (0 <= b.t_s < b.t_e <= self.duration):
                raise OverlapError(f"burst [{b.t_s}, {b.t_e}) not inside [0, {self.duration})")
        for a, b in zip(ordered, ordered[1:]):
            if b.t_s < a.t_e:
                raise OverlapError(f"bursts [{a.t_s}, {a.t_e}) and [{b.t_s}, {b.t_e}) overlap")
        self.bursts = ordered


def generate_bursty(cfg):
    """Noise plus amplitude-scaled sinusoidal bursts on ``cfg.bursts``.

    Inside each burst the signal is
    ``amplitude * (1 + CARRIER_DEPTH * cos(2 pi f (t - t_s)))``. The offset
    keeps the squared envelope within a factor 9 of its peak, so with zero
    noise any ``psi <= 1/9`` (for equal amplitudes) marks every burst sample
    active and nothing else.
    Returns ``{"series": TimeSeries, "truth": [(t_s, t_e), ...]}``.
    """
    n = int(round(cfg.duration / cfg.dt))
    t = cfg.dt * np.arange(n)
    rng = np.random.default_rng(cfg.seed)
    values = cfg.noise_sd * rng.standard_normal(n) if cfg.noise_sd > 0 else np.zeros(n)
    truth = []
    for b in cfg.bursts:
        i0 = int(round(b.t_s / cfg.dt))
        i1 = int(round(b.t_e / cfg.dt))
        tt = t[i0:i1] - t[i0]
        values[i0:i1] += b.amplitude * (1.0 + CARRIER_DEPTH * np.cos(2 * np.pi * b.carrier_freq_hz * tt))
        truth.append((i0 * cfg.dt, i1 * cfg.dt))
    return {"series": TimeSeries(values, dt=cfg.dt, label="bursty"), "truth": truth}


def synthetic_ecg(duration=600.0, fs=250.0, rr=0.8, snr_db=20.0, seed=0, t_wave=True):
    """Gaussian-template ECG with known R-peak times.

    ``rr`` may be a scalar or a sequence cycled over beats. Noise is white
    Gaussian scaled so that signal power / noise power equals ``snr_db``.
    Returns ``(samples, fs, r_times)``.
    """
    rr_cycle = np.atleast_1d(np.asarray(rr, dtype=float))
    times = []
    t = 0.5
    k = 0
    while t < duration - 0.5:
        times.append(t)
        t += rr_cycle[k % rr_cycle.size]
        k += 1
    r_times = np.array(times)
    n = int(round(duration * fs))
    tt = np.arange(n) / fs
    sig = np.zeros(n)
    for tr in r_times:
        lo, hi = int((tr - 0.4) * fs), int((tr + 0.5) * fs)
        lo, hi = max(lo, 0), min(hi, n)
        seg = tt[lo:hi] - tr
        sig[lo:hi] += 1.0 * np.exp(-0.5 * (seg / 0.010) ** 2)
        sig[lo:hi] -= 0.15 * np.exp(-0.5 * ((seg + 0.025) / 0.008) ** 2)
        sig[lo:hi] += 0.1 * np.exp(-0.5 * ((seg + 0.18) / 0.025) ** 2)
        if t_wave:
            sig[lo:hi] += 0.3 * np.exp(-0.5 * ((seg - 0.25) / 0.045) ** 2)
    rng = np.random.default_rng(seed)
    p_sig = np.mean(sig**2)
    noise = rng.standard_normal(n) * np.sqrt(p_sig / 10 ** (snr_db / 10))
    return sig + noise, fs, r_times

"""Burst detection on the forcing coordinate and the statistics built on it."""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

from .errors import (
    AllZeroForcing,
    ConstantInput,
    DegenerateVariance,
    InputError,
    InsufficientData,
    NonFinite,
)


@dataclass(frozen=True)
class BurstAnalysis:
    psi: float
    threshold: float
    t_s: np.ndarray
    t_e: np.ndarray
    min_duration: float = 0.0
    merge_gap: float = 0.0
    dt: float = 1.0
    t0: float = 0.0
    n_samples: int = 0
    active: np.ndarray = field(default=None, repr=False)

    @property
    def bursts(self):
        return list(zip(self.t_s.tolist(), self.t_e.tolist()))

    @property
    def Tb(self):
        return self.t_e - self.t_s

    @property
    def Tib(self):
        return self.t_s[1:] - self.t_e[:-1]

    @property
    def n_bursts(self):
        return int(self.t_s.size)

    @property
    def duration(self):
        return self.n_samples * self.dt

    def summary(self):
        out = {"psi": self.psi, "threshold": self.threshold}
        out.update(burst_statistics(self))
        return out


def active_mask(vr, psi):
    """Samples whose squared forcing reaches ``psi`` times the peak."""
    vr = np.asarray(vr, dtype=float)
    if not 0 < psi < 1:
        raise InputError(f"psi must lie in (0, 1), got {psi}")
    if not np.all(np.isfinite(vr)):
        raise NonFinite("forcing contains NaN or Inf")
    energy = vr**2
    peak = energy.max()
    if peak == 0:
        raise AllZeroForcing("forcing is identically zero")
    # relative test keeps the rule exactly invariant to rescaling vr
    return energy / peak >= psi, psi * peak


def detect_bursts(forcing, psi=0.12, min_duration=0.0, merge_gap=0.0, dt=None, t0=None):
    """Group active samples into bursts ``[t_s, t_e)``.

    ``forcing`` is a :class:`~havok_intermittency.havok.ForcingSeries` or a
    plain array (then ``dt`` is required). A burst ends one sample after
    its last active sample, so a single-sample burst lasts ``dt``. Bursts
    closer than ``merge_gap`` are merged; bursts shorter than
    ``min_duration`` are then dropped.
    """
    if hasattr(forcing, "vr"):
        vr = forcing.vr
        dt = forcing.dt if dt is None else dt
        t0 = getattr(forcing, "t0", 0.0) if t0 is None else t0
    else:
        vr = np.asarray(forcing, dtype=float)
        if dt is None:
            raise InputError("dt is required when forcing is a bare array")
        t0 = 0.0 if t0 is None else t0
    active, threshold = active_mask(vr, psi)
    edges = np.diff(np.concatenate(([0], active.astype(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)

    if merge_gap > 0 and starts.size > 1:
        gaps = (starts[1:] - ends[:-1]) * dt
        keep = np.concatenate(([True], gaps >= merge_gap))
        starts = starts[keep]
        ends = ends[np.concatenate((keep[1:], [True]))]
    if min_duration > 0:
        long_enough = (ends - starts) * dt >= min_duration
        starts, ends = starts[long_enough], ends[long_enough]

    return BurstAnalysis(
        psi=float(psi),
        threshold=float(threshold),
        t_s=t0 + starts * dt,
        t_e=t0 + ends * dt,
        min_duration=float(min_duration),
        merge_gap=float(merge_gap),
        dt=float(dt),
        t0=float(t0),
        n_samples=int(np.size(vr)),
        active=active,
    )


def _mean_sd(x):
    x = np.asarray(x, dtype=float)
    mean = float(x.mean()) if x.size >= 1 else None
    sd = float(x.std(ddof=1)) if x.size >= 2 else None
    return mean, sd


def burst_statistics(b):
    """Sample mean and SD (n - 1) of burst and inter-burst durations.

    Entries are ``None`` when too few values exist to define them.
    """
    tb_mean, tb_sd = _mean_sd(b.Tb)
    tib_mean, tib_sd = _mean_sd(b.Tib)
    return {
        "n_bursts": b.n_bursts,
        "tb_mean": tb_mean,
        "tb_sd": tb_sd,
        "tib_mean": tib_mean,
        "tib_sd": tib_sd,
    }


def psi_sweep(forcing, psis, min_duration=0.0, merge_gap=0.0):
    rows = []
    for psi in psis:
        b = detect_bursts(forcing, psi, min_duration, merge_gap)
        rows.append({"psi": float(psi), "n_bursts": b.n_bursts, "active_time": float(b.Tb.sum())})
    return rows


@dataclass(frozen=True)
class DistributionEstimate:
    bin_edges: np.ndarray
    density: np.ndarray
    mean: float
    sd: float
    excess_kurtosis: float
    tail_mass_3sigma: float

    @property
    def bin_centers(self):
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def gaussian_ref(self):
        x = self.bin_centers
        return np.exp(-0.5 * ((x - self.mean) / self.sd) ** 2) / (self.sd * np.sqrt(2 * np.pi))


def estimate_pdf(samples, binning="freedman_diaconis", bins=None):
    """Histogram density plus moment summary of ``samples``.

    ``binning`` is ``"freedman_diaconis"`` (falls back to Sturges when the
    interquartile range is zero) or ``"fixed"`` with ``bins`` bins.
    Kurtosis is reported in Fisher's (excess) form, zero for a Gaussian.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 8:
        raise InsufficientData(f"need at least 8 samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise NonFinite("samples contain NaN or Inf")
    # a constant array can still give m2 > 0 once the mean is rounded
    if np.ptp(x) == 0:
        raise DegenerateVariance("all samples are equal")
    mean = x.mean()
    dev = x - mean
    m2 = np.mean(dev**2)
    m4 = np.mean(dev**4)
    if binning == "fixed":
        edges = np.histogram_bin_edges(x, bins=int(bins))
    elif binning == "freedman_diaconis":
        q75, q25 = np.percentile(x, [75, 25])
        edges = np.histogram_bin_edges(x, bins="fd" if q75 > q25 else "sturges")
    else:
        raise InputError(f"unknown binning {binning!r}")
    density, edges = np.histogram(x, bins=edges, density=True)
    sd = np.sqrt(m2)
    return DistributionEstimate(
        bin_edges=edges,
        density=density,
        mean=float(mean),
        sd=float(sd),
        excess_kurtosis=float(m4 / m2**2 - 3.0),
        tail_mass_3sigma=float(np.mean(np.abs(dev) > 3 * sd)),
    )


def student_t_two_sided(t, df):
    """Two-sided p-value of Student's t via the regularised incomplete beta."""
    t = float(t)
    if np.isinf(t):
        return 0.0
    return float(betainc(0.5 * df, 0.5, df / (df + t * t)))


def pearson_test(x, y):
    """Pearson correlation with a two-sided t-test p-value (df = n - 2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InputError("x and y must be 1-D arrays of equal length")
    n = x.size
    if n < 3:
        raise InsufficientData(f"need n >= 3 pairs, got {n}")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = np.dot(dx, dx), np.dot(dy, dy)
    if sxx == 0 or syy == 0:
        raise ConstantInput("correlation undefined for constant input")
    r = float(np.clip(np.dot(dx, dy) / np.sqrt(sxx * syy), -1.0, 1.0))
    df = n - 2
    if abs(r) == 1.0:
        return {"r": r, "p_value": 0.0, "n": n}
    t = r * np.sqrt(df / (1.0 - r * r))
    return {"r": r, "p_value": student_t_two_sided(t, df), "n": n}

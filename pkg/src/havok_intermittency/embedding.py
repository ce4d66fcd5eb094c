"""Hankel (trajectory) matrix construction, SVD and rank truncation.

The Hankel matrix is stored as ``p x q``: one row per delay and one column
per time snapshot, so the right singular vectors are time series of length
``q`` (the eigen time-delay coordinates).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, InvalidRank, NonFinite, SeriesTooShort


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled scalar measurement."""

    values: np.ndarray
    dt: float
    t0: float = 0.0
    label: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise NonFinite("time series must be one-dimensional")
        if values.size < 2:
            raise SeriesTooShort(f"time series needs at least 2 samples, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise NonFinite("time series contains NaN or Inf")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise NonFinite(f"dt must be a positive finite number, got {self.dt}")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.values.size)

    @property
    def fs(self):
        return 1.0 / self.dt


@dataclass(frozen=True)
class DelayEmbedding:
    window_p: int
    lag_tau: int
    hankel: np.ndarray
    svd_u: np.ndarray
    svd_s: np.ndarray
    svd_v: np.ndarray
    rank_r: int
    dt: float = 1.0
    t0: float = 0.0

    @property
    def q(self):
        return self.hankel.shape[1]

    @property
    def coordinates(self):
        """First ``rank_r`` eigen time-delay coordinates, shape ``q x r``."""
        return self.svd_v[:, : self.rank_r]

    @property
    def forcing(self):
        return self.svd_v[:, self.rank_r - 1]

    def energy_fractions(self):
        s2 = self.svd_s**2
        return s2 / s2.sum()


def build_hankel(z, window_p, lag_tau=1):
    """Stack delayed copies of ``z`` into a ``p x q`` Hankel matrix.

    ``H[i, j] = z[i * lag_tau + j]`` with ``q = N - (p - 1) * lag_tau``.
    """
    values = z.values if isinstance(z, TimeSeries) else np.asarray(z, dtype=float)
    if not np.all(np.isfinite(values)):
        raise NonFinite("series contains NaN or Inf")
    if window_p < 2:
        raise InvalidRank(f"window_p must be >= 2, got {window_p}")
    if lag_tau < 1:
        raise InvalidRank(f"lag_tau must be >= 1, got {lag_tau}")
    n = values.size
    q = n - (window_p - 1) * lag_tau
    if q < window_p:
        raise SeriesTooShort(
            f"N={n} gives q={q} snapshots for p={window_p}, tau={lag_tau}; need q >= p"
        )
    rows = np.arange(window_p)[:, None] * lag_tau
    cols = np.arange(q)[None, :]
    return values[rows + cols]


def _fix_signs(u, vt):
    # largest-magnitude entry of each left singular vector made nonnegative
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, vt * signs[:, None]


def decompose(hankel):
    """Economy SVD ``H = U diag(s) V^T`` under a deterministic sign convention.

    Returns ``(U, s, V)`` with ``V`` of shape ``q x m`` (not transposed).
    """
    hankel = np.asarray(hankel, dtype=float)
    if not np.all(np.isfinite(hankel)):
        raise NonFinite("Hankel matrix contains NaN or Inf")
    try:
        u, s, vt = np.linalg.svd(hankel, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        norm = np.linalg.norm(hankel)
        raise ConvergenceFailure(
            f"SVD did not converge for matrix of shape {hankel.shape} "
            f"(Frobenius norm {norm:.3e}): {exc}"
        ) from exc
    u, vt = _fix_signs(u, vt)
    return u, s, vt.T


def hard_threshold_coefficient(beta):
    """Median-based optimal hard threshold coefficient for unknown noise level."""
    return 0.56 * beta**3 - 0.95 * beta**2 + 1.82 * beta + 1.43


def select_rank(s, p, q, policy="auto", value=None):
    """Pick the truncation rank.

    Parameters
    ----------
    s : array
        Singular values, descending.
    p, q : int
        Hankel matrix shape; sets the aspect ratio for the ``auto`` threshold.
    policy : {"auto", "fixed", "energy"}
        ``auto`` counts singular values above ``omega(beta) * median(s)``;
        ``fixed`` returns ``value``; ``energy`` returns the smallest rank whose
        cumulative squared singular values reach the fraction ``value``.

    The result is never below 2: one linear state plus one forcing coordinate.
    """
    s = np.asarray(s, dtype=float)
    m = s.size
    if policy == "fixed":
        r = int(value)
        if not 2 <= r <= m:
            raise InvalidRank(f"fixed rank {r} outside [2, {m}]")
        return r
    if policy == "auto":
        beta = min(p, q) / max(p, q)
        cutoff = hard_threshold_coefficient(beta) * np.median(s)
        # round-off floor: without it an exactly low-rank matrix has a median
        # of ~1e-16 and noise-level values pass the threshold
        cutoff = max(cutoff, s[0] * max(p, q) * np.finfo(float).eps)
        r = int(np.count_nonzero(s > cutoff))
    elif policy == "energy":
        frac = float(value)
        if not 0 < frac <= 1:
            raise InvalidRank(f"energy fraction must lie in (0, 1], got {frac}")
        cum = np.cumsum(s**2) / np.sum(s**2)
        r = int(np.searchsorted(cum, frac - 1e-12) + 1)
    else:
        raise InvalidRank(f"unknown rank policy {policy!r}")
    return int(min(max(r, 2), m))


def embed(z, window_p=15, lag_tau=1, policy="auto", value=None):
    """Hankel matrix, SVD and truncation rank in one call."""
    if not isinstance(z, TimeSeries):
        z = TimeSeries(np.asarray(z, dtype=float), dt=1.0)
    hankel = build_hankel(z, window_p, lag_tau)
    u, s, v = decompose(hankel)
    r = select_rank(s, *hankel.shape, policy=policy, value=value)
    return DelayEmbedding(
        window_p=window_p,
        lag_tau=lag_tau,
        hankel=hankel,
        svd_u=u,
        svd_s=s,
        svd_v=v,
        rank_r=r,
        dt=z.dt,
        t0=z.t0,
    )

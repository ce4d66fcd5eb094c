"""Forced linear model on eigen time-delay coordinates.

The first ``r - 1`` coordinates evolve linearly and the last one, ``v_r``,
enters as an external input::

    v[k+1] = A v[k] + B v_r[k]         (discrete mode)
    dv/dt  = A v(t) + B v_r(t)         (derivative mode)

Both are fitted by least squares through an SVD pseudo-inverse.
"""

import json
import logging
from dataclasses import dataclass

import numpy as np

from .errors import (
    Divergence,
    InputError,
    RankDeficient,
    SeriesTooShort,
    ZeroVariance,
)

log = logging.getLogger(__name__)

PINV_RCOND = 1e-10
DIVERGENCE_LIMIT = 1e12
RESIDUAL_WARN_RATIO = 0.1


@dataclass(frozen=True)
class CoordinateSeries:
    v: np.ndarray  # q x r, column j = v_{j+1}(t)
    dt: float = 1.0
    t0: float = 0.0

    @classmethod
    def from_embedding(cls, emb):
        return cls(v=emb.coordinates, dt=emb.dt, t0=emb.t0)

    @property
    def r(self):
        return self.v.shape[1]


@dataclass(frozen=True)
class ForcingSeries:
    vr: np.ndarray
    dt: float
    energy_fraction: float = float("nan")
    t0: float = 0.0

    @classmethod
    def from_embedding(cls, emb):
        return cls(
            vr=emb.forcing.copy(),
            dt=emb.dt,
            energy_fraction=float(emb.energy_fractions()[emb.rank_r - 1]),
            t0=emb.t0,
        )

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.vr.size)


@dataclass(frozen=True)
class HavokModel:
    A: np.ndarray
    B: np.ndarray
    mode: str
    residual_row_norm: float
    r: int
    dt: float
    operator_norm: float = float("nan")

    @property
    def residual_ratio(self):
        return self.residual_row_norm / self.operator_norm

    def to_dict(self):
        return {
            "r": int(self.r),
            "dt": float(self.dt),
            "mode": self.mode,
            "A": [float(a) for a in self.A.ravel()],
            "B": [float(b) for b in self.B],
            "residual_row_norm": float(self.residual_row_norm),
        }

    @classmethod
    def from_dict(cls, d):
        r = int(d["r"])
        return cls(
            A=np.asarray(d["A"], dtype=float).reshape(r - 1, r - 1),
            B=np.asarray(d["B"], dtype=float),
            mode=d["mode"],
            residual_row_norm=float(d["residual_row_norm"]),
            r=r,
            dt=float(d["dt"]),
        )

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))


def pinv(m, rcond=PINV_RCOND):
    """Pseudo-inverse through the SVD with a cutoff relative to ``s_max``."""
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        raise RankDeficient("pseudo-inverse of an all-zero matrix")
    keep = s > rcond * s[0]
    return (vt[keep].T / s[keep]) @ u[:, keep].T


def central_difference(v, dt):
    """Fourth-order central difference along axis 0; drops 2 rows at each end."""
    return (-v[4:] + 8.0 * v[3:-1] - 8.0 * v[1:-3] + v[:-4]) / (12.0 * dt)


def fit(coords, mode="discrete", rcond=PINV_RCOND):
    """Least-squares fit of ``A`` and ``B`` from coordinate snapshots."""
    v = np.asarray(coords.v, dtype=float)
    q, r = v.shape
    if r < 2:
        raise InputError(f"need r >= 2 coordinates, got {r}")
    if q < r + 5:
        raise SeriesTooShort(f"q={q} snapshots is too few for r={r}; need q >= r + 5")
    if not np.any(v):
        raise RankDeficient("coordinates are identically zero")
    if mode == "discrete":
        x, y = v[:-1].T, v[1:].T
    elif mode == "derivative":
        y = central_difference(v, coords.dt).T
        x = v[2:-2].T
    else:
        raise InputError(f"unknown mode {mode!r}")
    op = y @ pinv(x, rcond)
    model = HavokModel(
        A=op[: r - 1, : r - 1].copy(),
        B=op[: r - 1, r - 1].copy(),
        mode=mode,
        residual_row_norm=float(np.linalg.norm(op[r - 1])),
        r=r,
        dt=float(coords.dt),
        operator_norm=float(np.linalg.norm(op)),
    )
    if model.residual_ratio > RESIDUAL_WARN_RATIO:
        log.warning(
            "last-row norm is %.3f of the operator norm; "
            "the forcing coordinate is not well separated",
            model.residual_ratio,
        )
    return model


def simulate(model, v0, forcing):
    """Drive the linear model with a recorded forcing series.

    Returns states of shape ``len(forcing) x (r - 1)``; row 0 is ``v0``.
    Derivative-mode models are integrated with RK4, holding the forcing
    constant across each step.
    """
    vr = np.asarray(forcing.vr if isinstance(forcing, ForcingSeries) else forcing, dtype=float)
    n = vr.size
    if n < 2:
        raise SeriesTooShort("forcing must have at least 2 samples")
    v = np.asarray(v0, dtype=float).copy()
    if v.shape != (model.r - 1,) or not np.all(np.isfinite(v)):
        raise InputError(f"v0 must be a finite vector of length {model.r - 1}")
    A, B, h = model.A, model.B, model.dt
    out = np.empty((n, model.r - 1))
    out[0] = v
    for k in range(n - 1):
        if model.mode == "discrete":
            v = A @ v + B * vr[k]
        else:
            u = B * vr[k]
            k1 = A @ v + u
            k2 = A @ (v + 0.5 * h * k1) + u
            k3 = A @ (v + 0.5 * h * k2) + u
            k4 = A @ (v + h * k3) + u
            v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        norm = np.linalg.norm(v)
        if not np.isfinite(norm) or norm > DIVERGENCE_LIMIT:
            raise Divergence(f"state norm exceeded {DIVERGENCE_LIMIT:g} at step {k + 1}", index=k + 1)
        out[k + 1] = v
    return out


def reconstruction_score(predicted, actual):
    """Per-column R^2 and RMSE normalised by the standard deviation of ``actual``."""
    predicted = np.asarray(predicted, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if predicted.shape != actual.shape:
        raise InputError(f"shape mismatch {predicted.shape} vs {actual.shape}")
    if actual.ndim == 1:
        predicted, actual = predicted[:, None], actual[:, None]
    centered = actual - actual.mean(axis=0)
    ss_tot = np.sum(centered**2, axis=0)
    if np.any(ss_tot == 0):
        raise ZeroVariance("actual series has a constant column")
    ss_res = np.sum((actual - predicted) ** 2, axis=0)
    n = actual.shape[0]
    return {
        "r2": 1.0 - ss_res / ss_tot,
        "nrmse": np.sqrt(ss_res / n) / np.sqrt(ss_tot / n),
    }

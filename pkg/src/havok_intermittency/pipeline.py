"""End-to-end analysis of one record and pooling across records."""

import csv
import hashlib
import json
import time
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import signal as sps

from . import __version__
from . import io as hio
from .embedding import TimeSeries, build_hankel, decompose, select_rank, DelayEmbedding
from .errors import HavokError, InputError, InsufficientRecords
from .havok import CoordinateSeries, ForcingSeries, fit
from .intermittency import burst_statistics, detect_bursts, estimate_pdf, pearson_test
from .physio import (
    HRV_FEATURES,
    EcgRecord,
    RrSeries,
    bandpass_butterworth,
    burst_annotation_association,
    detect_rpeaks,
    feature_series,
    hrv_features,
)
from .spectral import amplitude_spectrum, cwt_morse


def _coerce_numbers(obj):
    # 5 and 5.0 must serialise (and hash) identically
    for f in fields(obj):
        value = getattr(obj, f.name)
        if f.type in (float, "float") and isinstance(value, (int, float)) and not isinstance(value, bool):
            setattr(obj, f.name, float(value))
        elif f.type in (int, "int") and isinstance(value, float) and value.is_integer():
            setattr(obj, f.name, int(value))


@dataclass
class WaveletConfig:
    gamma: float = 3.0
    time_bandwidth: float = 60.0
    voices: int = 10


@dataclass
class AnalysisConfig:
    window_p: int = 15
    lag_tau: int = 1
    rank_policy: str = "auto"
    rank_value: float = None
    mode: str = "discrete"
    psi: float = 0.12
    min_duration: float = 0.0
    merge_gap: float = 0.0
    energy_fraction: float = 0.95
    pdf_binning: str = "freedman_diaconis"
    hrv_feature: str = "tri"
    max_gap: int = 3
    filter_low: float = 0.5
    filter_high: float = 30.0
    filter_order: int = 5
    cwt_max_samples: int = 8192
    svg: bool = True
    wavelet: WaveletConfig = field(default_factory=WaveletConfig)

    def __post_init__(self):
        if isinstance(self.wavelet, dict):
            self.wavelet = WaveletConfig(**self.wavelet)
        _coerce_numbers(self)
        _coerce_numbers(self.wavelet)
        if self.rank_policy not in ("auto", "fixed", "energy"):
            raise InputError(f"rank_policy must be auto, fixed or energy; got {self.rank_policy!r}")
        if self.rank_policy != "auto" and self.rank_value is None:
            raise InputError(f"rank_policy={self.rank_policy!r} needs rank_value")
        if self.mode not in ("discrete", "derivative"):
            raise InputError(f"mode must be discrete or derivative; got {self.mode!r}")
        if not 0 < self.psi < 1:
            raise InputError(f"psi must lie in (0, 1); got {self.psi}")
        if not 0 < self.energy_fraction < 1:
            raise InputError(f"energy_fraction must lie in (0, 1); got {self.energy_fraction}")
        if self.window_p < 2 or self.lag_tau < 1:
            raise InputError("window_p must be >= 2 and lag_tau >= 1")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path):
        path = Path(path)
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            with open(path, "rb") as f:
                return cls.from_dict(tomllib.load(f))
        return cls.from_dict(json.loads(path.read_text()))

    def hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# one row of the per-record summary table
REPORT_COLUMNS = (
    "ahi",
    "rank_r",
    "vr_energy_pct",
    "tb_mean",
    "tb_sd",
    "tib_mean",
    "tib_sd",
    "f_L_mHz",
    "f_H_mHz",
)


@dataclass
class RecordReport:
    record_id: str
    ahi: float = None
    rank_r: int = None
    vr_energy_pct: float = None
    tb_mean: float = None
    tb_sd: float = None
    tib_mean: float = None
    tib_sd: float = None
    f_L_mHz: float = None
    f_H_mHz: float = None
    n_bursts: int = None
    overlap_fraction: float = None
    psi: float = None
    diagnostics: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=hio._json_default) + "\n"


def report_schema():
    return json.loads(resources.files(__package__).joinpath("data/report.schema.json").read_text())


def load_table1():
    """Published per-patient summary rows, as reports."""
    text = resources.files(__package__).joinpath("data/table1.csv").read_text()
    reports = []
    for row in csv.DictReader(text.splitlines()):
        reports.append(
            RecordReport(
                record_id=row["record_id"],
                ahi=float(row["ahi"]),
                rank_r=int(row["rank_r"]),
                vr_energy_pct=float(row["vr_energy_pct"]),
                tb_mean=float(row["tb_mean"]),
                tb_sd=float(row["tb_sd"]),
                tib_mean=float(row["tib_mean"]),
                tib_sd=float(row["tib_sd"]),
                f_L_mHz=float(row["f_L_mHz"]),
                f_H_mHz=float(row["f_H_mHz"]),
            )
        )
    return reports


class _Stage:
    """Tags any HavokError raised inside the block with the stage name."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if isinstance(exc, HavokError) and exc.stage is None:
            exc.stage = self.name
        return False


def series_from_ecg(ecg, cfg):
    with _Stage("filter"):
        filtered = bandpass_butterworth(ecg, cfg.filter_low, cfg.filter_high, cfg.filter_order)
    with _Stage("rpeaks"):
        rr = detect_rpeaks(filtered)
    return series_from_rr(rr, cfg, label=ecg.record_id)


def series_from_rr(rr, cfg, label=""):
    with _Stage("hrv"):
        frames = hrv_features(rr)
        series = feature_series(frames, cfg.hrv_feature, max_gap=cfg.max_gap)
    return TimeSeries(series.values, series.dt, series.t0, label or series.label), rr, frames


def _minutes(x):
    return None if x is None else x / 60.0


def run_pipeline(source, cfg=None, outdir=None, annotations=None, ahi=None, record_id=None):
    """Analyse one record and optionally write all artifacts to ``outdir``.

    ``source`` is a :class:`TimeSeries`, an :class:`EcgRecord` or an
    :class:`RrSeries`. Returns ``(report, results)`` where ``results`` holds
    the intermediate objects.
    """
    cfg = cfg or AnalysisConfig()
    results = {}
    if isinstance(source, EcgRecord):
        series, rr, frames = series_from_ecg(source, cfg)
        results.update(rr=rr, frames=frames)
        record_id = record_id or source.record_id
    elif isinstance(source, RrSeries):
        series, rr, frames = series_from_rr(source, cfg, label=record_id or "")
        results.update(rr=rr, frames=frames)
    elif isinstance(source, TimeSeries):
        series = source
    else:
        raise InputError(f"unsupported input type {type(source).__name__}")
    record_id = record_id or series.label or "record"
    results["series"] = series

    with _Stage("embed"):
        hankel = build_hankel(series, cfg.window_p, cfg.lag_tau)
        u, s, v = decompose(hankel)
        r = select_rank(s, *hankel.shape, policy=cfg.rank_policy, value=cfg.rank_value)
        emb = DelayEmbedding(cfg.window_p, cfg.lag_tau, hankel, u, s, v, r, series.dt, series.t0)
    results["embedding"] = emb
    forcing = ForcingSeries.from_embedding(emb)
    results["forcing"] = forcing

    with _Stage("fit"):
        model = fit(CoordinateSeries.from_embedding(emb), cfg.mode)
    results["model"] = model

    with _Stage("bursts"):
        bursts = detect_bursts(forcing, cfg.psi, cfg.min_duration, cfg.merge_gap)
        stats = burst_statistics(bursts)
    results["bursts"] = bursts

    with _Stage("distribution"):
        dist = estimate_pdf(forcing.vr, cfg.pdf_binning)
    results["distribution"] = dist

    with _Stage("spectrum"):
        vr_series = TimeSeries(forcing.vr, forcing.dt, forcing.t0)
        spec = amplitude_spectrum(vr_series).with_band(cfg.energy_fraction)
    results["spectrum"] = spec

    with _Stage("scalogram"):
        cwt_input, decimation = vr_series, 1
        if len(vr_series) > cfg.cwt_max_samples:
            decimation = int(np.ceil(len(vr_series) / cfg.cwt_max_samples))
            reduced = sps.decimate(vr_series.values, decimation, ftype="fir", zero_phase=True)
            cwt_input = TimeSeries(reduced, vr_series.dt * decimation, vr_series.t0)
        scal = cwt_morse(cwt_input, cfg.wavelet.gamma, cfg.wavelet.time_bandwidth, cfg.wavelet.voices)
    results["scalogram"] = scal

    assoc = None
    if annotations is not None:
        with _Stage("association"):
            assoc = burst_annotation_association(bursts, annotations)
        results["association"] = assoc

    report = RecordReport(
        record_id=record_id,
        ahi=ahi,
        rank_r=int(r),
        vr_energy_pct=100.0 * forcing.energy_fraction,
        tb_mean=_minutes(stats["tb_mean"]),
        tb_sd=_minutes(stats["tb_sd"]),
        tib_mean=_minutes(stats["tib_mean"]),
        tib_sd=_minutes(stats["tib_sd"]),
        f_L_mHz=1e3 * spec.f_L,
        f_H_mHz=1e3 * spec.f_H,
        n_bursts=stats["n_bursts"],
        overlap_fraction=None if assoc is None else assoc["overlap_fraction"],
        psi=cfg.psi,
        diagnostics={
            "excess_kurtosis": dist.excess_kurtosis,
            "tail_mass_3sigma": dist.tail_mass_3sigma,
            "threshold": bursts.threshold,
            "residual_row_norm": model.residual_row_norm,
            "residual_ratio": model.residual_ratio,
            "n_samples": len(series),
            "q": emb.q,
            "dt": series.dt,
            "mode": cfg.mode,
            "cwt_decimation": decimation,
            "point_biserial_r": None if assoc is None else assoc["point_biserial_r"],
            "point_biserial_p": None if assoc is None else assoc["p_value"],
        },
        provenance={
            "config_hash": cfg.hash(),
            "tool_version": __version__,
            "created": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        },
    )
    if outdir is not None:
        write_artifacts(Path(outdir), report, results, cfg, annotations)
    return report, results


def write_artifacts(outdir, report, results, cfg, annotations=None):
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.json").write_text(report.to_json())
    hio.write_json(outdir / "config.json", cfg.to_dict())
    forcing, bursts = results["forcing"], results["bursts"]
    emb, model = results["embedding"], results["model"]
    hio.write_columns(outdir / "forcing.csv", {"time": forcing.times, "vr": forcing.vr})
    write_bursts(outdir, bursts)
    hio.write_json(outdir / "model.json", model.to_dict())
    hio.write_json(outdir / "embedding.json",
                   {"p": emb.window_p, "tau": emb.lag_tau, "q": emb.q, "r": emb.rank_r})
    hio.write_matrix(outdir / "S.csv", emb.svd_s[None, :])
    dist = results["distribution"]
    hio.write_columns(outdir / "distribution.csv", {
        "bin_center": dist.bin_centers, "density": dist.density, "gaussian_ref": dist.gaussian_ref,
    })
    spec = results["spectrum"]
    hio.write_columns(outdir / "spectrum.csv",
                      {"freq_hz": spec.freqs, "amplitude": spec.amplitude, "power": spec.power})
    write_scalogram(outdir, results["scalogram"])
    if "rr" in results:
        hio.write_rr(outdir / "rr.csv", results["rr"])
        write_frames(outdir / "hrv.csv", results["frames"])
        hio.write_series(outdir / "series.csv", results["series"], results["series"].label or "value")
    if "association" in results:
        hio.write_json(outdir / "association.json", results["association"])
    if cfg.svg:
        from . import plotting

        plotting.plot_forcing(outdir / "forcing.svg", forcing, bursts, annotations)
        plotting.plot_scalogram(outdir / "scalogram.svg", results["scalogram"], annotations)
        plotting.plot_spectrum(outdir / "spectrum.svg", spec)
        plotting.plot_distribution(outdir / "distribution.svg", dist)


def write_bursts(outdir, bursts):
    outdir = Path(outdir)
    hio.write_columns(outdir / "bursts.csv", {
        "k": np.arange(bursts.n_bursts), "t_s": bursts.t_s, "t_e": bursts.t_e, "Tb": bursts.Tb,
    })
    hio.write_json(outdir / "bursts.json", bursts.summary())


def write_scalogram(outdir, sc, max_cols=4096):
    """Plot-sized CSV grid plus the full complex matrix as ``.npz``."""
    outdir = Path(outdir)
    step = max(1, int(np.ceil(sc.times.size / max_cols)))
    grid = np.empty((sc.freqs.size + 1, sc.times[::step].size + 1))
    grid[0, 0] = np.nan
    grid[0, 1:] = sc.times[::step]
    grid[1:, 0] = sc.freqs
    grid[1:, 1:] = sc.modulus[:, ::step]
    np.savetxt(outdir / "scalogram.csv", grid, delimiter=",", fmt="%.10g")
    np.savez_compressed(outdir / "scalogram.npz", freqs=sc.freqs, scales=sc.scales,
                        times=sc.times, coefficients=sc.coefficients, coi=sc.coi)


def write_frames(path, frames):
    cols = {"minute": [f.minute_index for f in frames], "n_beats": [f.n_beats for f in frames]}
    for name in HRV_FEATURES:
        cols[name] = [np.nan if getattr(f, name) is None else getattr(f, name) for f in frames]
    hio.write_columns(path, cols)


def pool_reports(reports):
    """Mean and sample SD of each summary column, plus AHI correlations.

    Correlations of AHI with the mean burst and inter-burst durations need at
    least 3 records carrying all three values; otherwise ``correlations`` is
    ``None`` and ``correlation_error`` explains why. Pooled means are always
    returned.
    """
    pooled = {}
    for col in REPORT_COLUMNS:
        vals = np.array([getattr(r, col) for r in reports if getattr(r, col) is not None], float)
        pooled[col] = {
            "mean": float(vals.mean()) if vals.size else None,
            "sd": float(vals.std(ddof=1)) if vals.size > 1 else None,
            "n": int(vals.size),
        }
    out = {"n_records": len(reports), "columns": pooled, "correlations": None,
           "correlation_error": None}
    try:
        out["correlations"] = ahi_correlations(reports)
    except InsufficientRecords as exc:
        out["correlation_error"] = str(exc)
    return out


def ahi_correlations(reports):
    rows = [r for r in reports if None not in (r.ahi, r.tb_mean, r.tib_mean)]
    if len(rows) < 3:
        raise InsufficientRecords(f"{len(rows)} records with AHI, Tb and Tib; need >= 3")
    ahi = np.array([r.ahi for r in rows])
    return {
        "ahi_tb": pearson_test(ahi, np.array([r.tb_mean for r in rows])),
        "ahi_tib": pearson_test(ahi, np.array([r.tib_mean for r in rows])),
    }

"""Command-line interface: ``havok-int <subcommand> ...``.

Exit codes: 0 success, 2 bad input, 3 numerical failure, 4 insufficient data.
"""

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from . import io as hio
from .embedding import build_hankel, decompose, select_rank
from .errors import HavokError, InputError
from .havok import CoordinateSeries, ForcingSeries, fit
from .intermittency import detect_bursts, psi_sweep
from .pipeline import (
    AnalysisConfig,
    WaveletConfig,
    load_table1,
    pool_reports,
    RecordReport,
    run_pipeline,
    series_from_ecg,
    series_from_rr,
    write_bursts,
    write_frames,
    write_scalogram,
)
from .spectral import amplitude_spectrum, cwt_morse, windowed_spectra
from .systems import Burst, SyntheticBurstConfig, generate_bursty, lobe_switch_times, lorenz_measurement

log = logging.getLogger("havok_intermittency")


# --- config flags -----------------------------------------------------------------


def _config_fields():
    """(flag, dotted key, type, default) for every config entry."""
    out = []
    for f in fields(AnalysisConfig):
        if f.name == "wavelet":
            for g in fields(WaveletConfig):
                out.append((f"--wavelet-{g.name.replace('_', '-')}", f"wavelet.{g.name}",
                            type(g.default), g.default))
            continue
        default = getattr(AnalysisConfig(), f.name) if f.name != "rank_value" else None
        typ = float if f.name == "rank_value" else type(default)
        out.append((f"--{f.name.replace('_', '-')}", f.name, typ, default))
    return out


def add_config_args(p):
    g = p.add_argument_group("analysis configuration (overrides --config file)")
    g.add_argument("--config", type=Path, help="JSON or TOML config file")
    for flag, key, typ, default in _config_fields():
        dest = "cfg__" + key.replace(".", "__")
        if typ is bool:
            g.add_argument(flag, dest=dest, action=argparse.BooleanOptionalAction, default=None,
                           help=f"(default {default})")
        else:
            g.add_argument(flag, dest=dest, type=typ, default=None, metavar=typ.__name__.upper(),
                           help=f"(default {default})")


def build_config(args):
    data = {}
    if getattr(args, "config", None):
        data = AnalysisConfig.load(args.config).to_dict()
    for key, value in vars(args).items():
        if not key.startswith("cfg__") or value is None:
            continue
        parts = key[5:].split("__")
        if len(parts) == 2:
            data.setdefault(parts[0], {})[parts[1]] = value
        else:
            data[parts[0]] = value
    return AnalysisConfig.from_dict(data)


# --- helpers -------------------------------------------------------------------------


def _outdir(path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _read_forcing(path, dt=None):
    ts = hio.read_series(path, dt=dt)
    return ForcingSeries(ts.values, ts.dt, t0=ts.t0)


def _embed(series, cfg):
    hankel = build_hankel(series, cfg.window_p, cfg.lag_tau)
    u, s, v = decompose(hankel)
    r = select_rank(s, *hankel.shape, policy=cfg.rank_policy, value=cfg.rank_value)
    return hankel, u, s, v, r


def _parse_range(text):
    try:
        a, b, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise InputError(f"expected a:b:step, got {text!r}") from None
    if step <= 0 or b < a:
        raise InputError(f"bad grid {text!r}")
    n = int(np.floor((b - a) / step + 1e-9)) + 1
    return a + step * np.arange(n)


def _parse_window(text):
    try:
        a, b = (float(x) for x in text.split(":"))
    except ValueError:
        raise InputError(f"expected t_a:t_b, got {text!r}") from None
    return a, b


# --- subcommands ---------------------------------------------------------------------


def cmd_generate(args):
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.system == "lorenz":
        series, states = lorenz_measurement(args.duration, args.dt, args.burn_in, tuple(args.x0))
        hio.write_series(out, series)
        truth = {"system": "lorenz", "dt": args.dt, "burn_in": args.burn_in,
                 "lobe_switch_times": lobe_switch_times(series.values, args.dt).tolist()}
    else:
        bursts = []
        for spec in args.burst or []:
            parts = [float(x) for x in spec.split(":")]
            bursts.append(Burst(*parts))
        cfg = SyntheticBurstConfig(duration=args.duration, dt=args.dt, noise_sd=args.noise_sd,
                                   bursts=bursts, seed=args.seed)
        gen = generate_bursty(cfg)
        hio.write_series(out, gen["series"])
        truth = {"system": "bursty", "seed": args.seed, "bursts": [list(b) for b in gen["truth"]]}
    truth_path = Path(args.truth) if args.truth else out.with_suffix(".truth.json")
    hio.write_json(truth_path, truth)
    return 0


def cmd_hrv(args):
    cfg = build_config(args)
    out = _outdir(args.out)
    if args.ecg:
        ecg = hio.read_ecg(args.ecg, fs=args.fs, gain=args.gain)
        series, rr, frames = series_from_ecg(ecg, cfg)
    else:
        series, rr, frames = series_from_rr(hio.read_rr(args.rr), cfg, label=Path(args.rr).stem)
    hio.write_rr(out / "rr.csv", rr)
    write_frames(out / "hrv.csv", frames)
    hio.write_series(out / "series.csv", series, cfg.hrv_feature)
    return 0


def cmd_embed(args):
    cfg = build_config(args)
    series = hio.read_series(args.input, dt=args.dt)
    out = _outdir(args.out)
    hankel, u, s, v, r = _embed(series, cfg)
    hio.write_matrix(out / "U.csv", u)
    hio.write_matrix(out / "S.csv", s[None, :])
    hio.write_matrix(out / "V.csv", v)
    hio.write_json(out / "embedding.json",
                   {"p": cfg.window_p, "tau": cfg.lag_tau, "q": hankel.shape[1], "r": r})
    return 0


def cmd_fit(args):
    cfg = build_config(args)
    series = hio.read_series(args.input, dt=args.dt)
    out = _outdir(args.out)
    hankel, u, s, v, r = _embed(series, cfg)
    model = fit(CoordinateSeries(v[:, :r], series.dt, series.t0), cfg.mode)
    model.save(out / "model.json")
    times = series.t0 + series.dt * np.arange(v.shape[0])
    hio.write_columns(out / "forcing.csv", {"time": times, "vr": v[:, r - 1]})
    hio.write_json(out / "embedding.json",
                   {"p": cfg.window_p, "tau": cfg.lag_tau, "q": hankel.shape[1], "r": r})
    return 0


def cmd_bursts(args):
    cfg = build_config(args)
    forcing = _read_forcing(args.forcing, dt=args.dt)
    out = _outdir(args.out)
    if args.psi_grid:
        rows = psi_sweep(forcing, _parse_range(args.psi_grid), cfg.min_duration, cfg.merge_gap)
        hio.write_columns(out / "psi_sweep.csv", {k: [r[k] for r in rows] for k in rows[0]})
        return 0
    bursts = detect_bursts(forcing, cfg.psi, cfg.min_duration, cfg.merge_gap)
    write_bursts(out, bursts)
    return 0


def cmd_spectrum(args):
    cfg = build_config(args)
    series = hio.read_series(args.input, dt=args.dt)
    out = _outdir(args.out)
    taper = "hann" if args.hann else None
    spec = amplitude_spectrum(series, taper=taper).with_band(cfg.energy_fraction)
    hio.write_columns(out / "spectrum.csv",
                      {"freq_hz": spec.freqs, "amplitude": spec.amplitude, "power": spec.power})
    band = {"f_L_hz": spec.f_L, "f_H_hz": spec.f_H, "energy_fraction": spec.energy_fraction,
            "windows": []}
    windows = [_parse_window(w) for w in args.window or []]
    for i, (w, ws) in enumerate(zip(windows, windowed_spectra(series, windows, taper)), 1):
        hio.write_columns(out / f"spectrum_W{i}.csv",
                          {"freq_hz": ws.freqs, "amplitude": ws.amplitude, "power": ws.power})
        peak = int(np.argmax(ws.amplitude[1:])) + 1
        band["windows"].append({"t_a": w[0], "t_b": w[1], "peak_hz": float(ws.freqs[peak])})
    hio.write_json(out / "band.json", band)
    if cfg.svg:
        from .plotting import plot_spectrum

        plot_spectrum(out / "spectrum.svg", spec)
    return 0


def cmd_scalogram(args):
    cfg = build_config(args)
    series = hio.read_series(args.input, dt=args.dt)
    out = _outdir(args.out)
    sc = cwt_morse(series, cfg.wavelet.gamma, cfg.wavelet.time_bandwidth, cfg.wavelet.voices)
    write_scalogram(out, sc)
    if cfg.svg:
        from .plotting import plot_scalogram

        ann = hio.read_annotations(args.annotations) if args.annotations else None
        plot_scalogram(out / "scalogram.svg", sc, ann)
    return 0


def _pipeline_job(job):
    """Run one record; returns (record_id, exit_code, error dict or None)."""
    kind, path, ann_path, ahi, record_id, cfg_dict, outdir, dt = job
    cfg = AnalysisConfig.from_dict(cfg_dict)
    try:
        if kind == "ecg":
            source = hio.read_ecg(path)
        elif kind == "rr":
            source = hio.read_rr(path)
        else:
            source = hio.read_series(path, dt=dt)
        record_id = record_id or Path(path).stem
        ann = hio.read_annotations(ann_path) if ann_path else None
        run_pipeline(source, cfg, outdir=outdir, annotations=ann, ahi=ahi, record_id=record_id)
        return record_id, 0, None
    except HavokError as exc:
        err = exc.to_dict()
        err["stage"] = err["stage"] or "pipeline"
    except (OSError, ValueError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "stage": "input", "exit_code": 2}
    _outdir(outdir)
    hio.write_json(Path(outdir) / "error.json", err)
    return record_id, err["exit_code"], err


def cmd_pipeline(args):
    cfg = build_config(args)
    inputs = [("series", p) for p in args.input or []]
    inputs += [("ecg", p) for p in args.ecg or []]
    inputs += [("rr", p) for p in args.rr or []]
    if not inputs:
        raise InputError("give at least one --input, --ecg or --rr")
    anns = args.annotations or []
    if anns and len(anns) != len(inputs):
        raise InputError("pass one --annotations file per input record")
    ahis = args.ahi or []
    if ahis and len(ahis) != len(inputs):
        raise InputError("pass one --ahi value per input record")
    out = _outdir(args.out)
    jobs = []
    for i, (kind, path) in enumerate(inputs):
        rid = args.record_id if (args.record_id and len(inputs) == 1) else None
        sub = out if len(inputs) == 1 else out / (rid or Path(path).stem)
        jobs.append((kind, str(path), anns[i] if anns else None, ahis[i] if ahis else None,
                     rid, cfg.to_dict(), str(sub), args.dt))
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_pipeline_job, jobs))
    else:
        results = [_pipeline_job(j) for j in jobs]
    worst = 0
    for rid, code, err in results:
        if err:
            print(json.dumps({"record_id": rid, **err}), file=sys.stderr)
        worst = max(worst, code)
    return worst


def cmd_pool(args):
    reports = []
    if args.table:
        reports += load_table1() if args.table == "table1" else _reports_from_csv(args.table)
    for path in args.reports:
        reports.append(RecordReport.from_dict(json.loads(Path(path).read_text())))
    if not reports:
        raise InputError("no reports given")
    pooled = pool_reports(reports)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        hio.write_json(args.out, pooled)
    else:
        print(json.dumps(pooled, indent=2, sort_keys=True))
    if pooled["correlation_error"]:
        print(json.dumps({"error": "InsufficientRecords", "message": pooled["correlation_error"],
                          "stage": "pool", "exit_code": 4}), file=sys.stderr)
        return 4
    return 0


def _reports_from_csv(path):
    import csv

    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    out = []
    for row in rows:
        d = {k: (None if v in ("", None) else v) for k, v in row.items()}
        for k in d:
            if k != "record_id" and d[k] is not None:
                d[k] = float(d[k])
        if d.get("rank_r") is not None:
            d["rank_r"] = int(d["rank_r"])
        out.append(RecordReport.from_dict(d))
    return out


# --- parser ------------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="havok-int", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthetic Lorenz or bursty series")
    g.add_argument("system", choices=["lorenz", "bursty"])
    g.add_argument("--out", required=True, help="series CSV path")
    g.add_argument("--truth", help="ground-truth JSON path (default: <out>.truth.json)")
    g.add_argument("--duration", type=float, default=200.0)
    g.add_argument("--dt", type=float, default=0.001)
    g.add_argument("--burn-in", type=float, default=10.0)
    g.add_argument("--x0", type=float, nargs=3, default=[-8.0, 8.0, 27.0])
    g.add_argument("--noise-sd", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--burst", action="append", metavar="T_S:T_E[:AMP[:FREQ]]")
    g.set_defaults(func=cmd_generate)

    h = sub.add_parser("hrv", help="ECG or RR intervals -> per-minute HRV features")
    src = h.add_mutually_exclusive_group(required=True)
    src.add_argument("--ecg", help="ECG CSV (time,mv) or int16 binary with JSON sidecar")
    src.add_argument("--rr", help="RR CSV (time,rr)")
    h.add_argument("--fs", type=float)
    h.add_argument("--gain", type=float)
    h.add_argument("--out", required=True)
    add_config_args(h)
    h.set_defaults(func=cmd_hrv)

    for name, func, helptext in (
        ("embed", cmd_embed, "Hankel matrix SVD; writes U, S, V"),
        ("fit", cmd_fit, "fit the forced linear model; writes model.json and forcing.csv"),
        ("spectrum", cmd_spectrum, "single-sided amplitude spectrum and dominant band"),
        ("scalogram", cmd_scalogram, "Morse wavelet scalogram"),
    ):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--input", required=True, help="time,value CSV (or single column with --dt)")
        s.add_argument("--dt", type=float)
        s.add_argument("--out", required=True)
        add_config_args(s)
        s.set_defaults(func=func)
        if name == "spectrum":
            s.add_argument("--window", action="append", metavar="T_A:T_B")
            s.add_argument("--hann", action="store_true")
        if name == "scalogram":
            s.add_argument("--annotations")

    b = sub.add_parser("bursts", help="threshold bursts of a forcing series")
    b.add_argument("--forcing", required=True, help="time,vr CSV")
    b.add_argument("--dt", type=float)
    b.add_argument("--out", required=True)
    b.add_argument("--psi-grid", metavar="A:B:STEP", help="sweep psi and count bursts")
    add_config_args(b)
    b.set_defaults(func=cmd_bursts)

    pl = sub.add_parser("pipeline", help="full analysis of one or more records")
    pl.add_argument("--input", action="append", help="time,value CSV")
    pl.add_argument("--ecg", action="append")
    pl.add_argument("--rr", action="append")
    pl.add_argument("--annotations", action="append", help="minute,label CSV (one per record)")
    pl.add_argument("--ahi", type=float, action="append")
    pl.add_argument("--record-id")
    pl.add_argument("--dt", type=float)
    pl.add_argument("--jobs", type=int, default=1)
    pl.add_argument("--out", required=True)
    add_config_args(pl)
    pl.set_defaults(func=cmd_pipeline)

    po = sub.add_parser("pool", help="pooled statistics and AHI correlations")
    po.add_argument("reports", nargs="*", help="report.json files")
    po.add_argument("--table", help="summary CSV, or 'table1' for the shipped published table")
    po.add_argument("--out")
    po.set_defaults(func=cmd_pool)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except HavokError as exc:
        err = exc.to_dict()
        err["stage"] = err["stage"] or args.command
    except (OSError, ValueError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "stage": "input", "exit_code": 2}
    print(json.dumps(err), file=sys.stderr)
    out = getattr(args, "out", None)
    if out and args.command in ("hrv", "embed", "fit", "bursts", "spectrum", "scalogram", "pipeline"):
        _outdir(out)
        hio.write_json(Path(out) / "error.json", err)
    return err["exit_code"]


if __name__ == "__main__":
    sys.exit(main())

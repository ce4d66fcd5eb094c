"""Readers and writers for the CSV / JSON / binary exchange formats."""

import csv
import json
from pathlib import Path

import numpy as np

from .embedding import TimeSeries
from .errors import InputError
from .physio import AnnotationTrack, EcgRecord, RrSeries


def _read_rows(path):
    with open(path, newline="") as f:
        rows = [row for row in csv.reader(f) if row and any(c.strip() for c in row)]
    if not rows:
        raise InputError(f"{path}: empty file")
    return rows


def _is_header(row):
    try:
        [float(c) for c in row]
    except ValueError:
        return True
    return False


def _uniform_dt(times, path):
    d = np.diff(times)
    if d.size == 0 or np.any(d <= 0):
        raise InputError(f"{path}: time column must be strictly increasing")
    # end-to-end span is less sensitive to per-row rounding than the median step
    dt = float((times[-1] - times[0]) / (times.size - 1))
    if np.max(np.abs(d - dt)) > 1e-6 * max(dt, 1.0):
        raise InputError(f"{path}: non-uniform sampling is not supported")
    return dt


def read_series(path, dt=None, label=None):
    """Read ``time,value`` CSV, or a headerless single column with ``dt``."""
    rows = _read_rows(path)
    label = label or Path(path).stem
    if _is_header(rows[0]):
        header = [c.strip().lower() for c in rows[0]]
        data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float)
        if "time" in header and data.shape[1] >= 2:
            t = data[:, header.index("time")]
            vcol = [i for i, h in enumerate(header) if h != "time"][0]
            return TimeSeries(data[:, vcol], dt=_uniform_dt(t, path) if dt is None else dt,
                              t0=float(t[0]), label=label)
        data = data[:, 0]
    else:
        data = np.array([[float(c) for c in r] for r in rows], dtype=float)
        if data.shape[1] >= 2 and dt is None:
            return TimeSeries(data[:, 1], dt=_uniform_dt(data[:, 0], path),
                              t0=float(data[0, 0]), label=label)
        data = data[:, -1]
    if dt is None:
        raise InputError(f"{path}: no time column; pass dt explicitly")
    return TimeSeries(data, dt=dt, label=label)


def write_series(path, series, value_name="value"):
    write_columns(path, {"time": series.times, value_name: series.values})


def write_columns(path, columns):
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(names)
        for row in zip(*arrays):
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (str, bytes)):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_matrix(path, m):
    np.savetxt(path, np.atleast_2d(m), delimiter=",", fmt="%.17g")


def read_matrix(path):
    return np.loadtxt(path, delimiter=",", ndmin=2)


def read_ecg(path, fs=None, gain=None, record_id=None):
    """ECG from ``time,mv`` CSV or int16 little-endian binary with a JSON sidecar.

    The sidecar (``<file>.json`` or ``<stem>.json``) holds ``fs`` and ``gain``
    (ADC units per mV) and optionally ``baseline``.
    """
    path = Path(path)
    record_id = record_id or path.stem
    if path.suffix.lower() == ".csv":
        ts = read_series(path, dt=None if fs is None else 1.0 / fs)
        return EcgRecord(ts.values, 1.0 / ts.dt, record_id)
    meta = {}
    for side in (path.with_suffix(path.suffix + ".json"), path.with_suffix(".json")):
        if side.exists():
            meta = json.loads(side.read_text())
            break
    fs = fs or meta.get("fs")
    gain = gain or meta.get("gain", 1.0)
    if fs is None:
        raise InputError(f"{path}: sampling rate unknown; provide a sidecar or fs")
    raw = np.fromfile(path, dtype="<i2").astype(float)
    samples = (raw - float(meta.get("baseline", 0.0))) / float(gain)
    return EcgRecord(samples, float(fs), record_id)


def write_ecg_binary(path, ecg, gain=200.0):
    path = Path(path)
    raw = np.clip(np.round(ecg.samples * gain), -32768, 32767).astype("<i2")
    raw.tofile(path)
    path.with_suffix(".json").write_text(json.dumps({"fs": ecg.fs, "gain": gain}))


def read_annotations(path):
    """``minute,label`` CSV with labels N/A; minutes must be consecutive from 0."""
    rows = _read_rows(path)
    if _is_header(rows[0][:1]):
        rows = rows[1:]
    minutes = [int(float(r[0])) for r in rows]
    labels = [r[1] for r in rows]
    order = np.argsort(minutes)
    minutes = [minutes[i] for i in order]
    if minutes != list(range(minutes[0], minutes[0] + len(minutes))):
        raise InputError(f"{path}: annotation minutes must be consecutive")
    return AnnotationTrack([labels[i] for i in order], t0=60.0 * minutes[0])


def write_annotations(path, ann):
    first = int(round(ann.t0 / ann.epoch))
    write_columns(path, {"minute": np.arange(len(ann.minute_labels)) + first,
                         "label": ann.minute_labels})


def read_rr(path, duration=None):
    """``time,rr`` CSV where ``time`` is the beat closing each interval."""
    rows = _read_rows(path)
    if _is_header(rows[0]):
        rows = rows[1:]
    data = np.array([[float(c) for c in r[:2]] for r in rows], dtype=float)
    t, rr = data[:, 0], data[:, 1]
    peaks = np.concatenate(([t[0] - rr[0]], t))
    return RrSeries.from_peak_times(peaks, duration=duration)


def write_rr(path, rr):
    write_columns(path, {"time": rr.peak_times[1:], "rr": rr.rr, "valid": rr.valid.astype(int)})


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")

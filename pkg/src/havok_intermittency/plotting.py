"""Static SVG figures. Output is deterministic for identical inputs."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "havok-intermittency"
_META = {"Date": None, "Creator": None}


def _annotation_lane(ax, ann, time_scale):
    labels = ann.indicator()
    edges = (ann.t0 + ann.epoch * np.arange(labels.size + 1)) / time_scale
    ax.pcolormesh(edges, [0, 1], labels[None, :], cmap="Greys", vmin=0, vmax=1.5)
    ax.set_yticks([])
    ax.set_ylabel("A/N", rotation=0, labelpad=12)


def _save(fig, path):
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def _time_scale(dt):
    return (60.0, "time (min)") if dt >= 60.0 else (1.0, "time (s)")


def plot_forcing(path, forcing, bursts=None, ann=None):
    scale, xlabel = _time_scale(forcing.dt)
    rows = 2 if ann is not None else 1
    fig, axes = plt.subplots(rows, 1, figsize=(10, 3 + rows), sharex=True, squeeze=False,
                             gridspec_kw={"height_ratios": [4, 1][:rows]})
    ax = axes[0, 0]
    t = forcing.times / scale
    ax.plot(t, forcing.vr, lw=0.6, color="0.3")
    if bursts is not None and bursts.active is not None:
        ax.plot(t, np.where(bursts.active, forcing.vr, np.nan), lw=0.9, color="tab:red")
    ax.set_ylabel("$v_r$")
    if ann is not None:
        _annotation_lane(axes[1, 0], ann, scale)
    axes[-1, 0].set_xlabel(xlabel)
    fig.tight_layout()
    _save(fig, path)


def plot_scalogram(path, sc, ann=None, max_cols=1024):
    scale, xlabel = _time_scale(sc.times[1] - sc.times[0])
    step = max(1, int(np.ceil(sc.times.size / max_cols)))
    t = sc.times[::step] / scale
    mod = sc.modulus[:, ::step]
    rows = 2 if ann is not None else 1
    fig, axes = plt.subplots(rows, 1, figsize=(10, 4 + rows), sharex=True, squeeze=False,
                             gridspec_kw={"height_ratios": [5, 1][:rows]})
    ax = axes[0, 0]
    mesh = ax.pcolormesh(t, sc.freqs, mod, shading="nearest", cmap="viridis",
                         rasterized=True)
    coi = np.clip(sc.coi[::step], sc.freqs.min(), sc.freqs.max())
    ax.fill_between(t, sc.freqs.min(), coi, color="white", alpha=0.35, lw=0)
    ax.set_yscale("log")
    ax.set_ylabel("frequency (Hz)")
    fig.colorbar(mesh, ax=axes[:, 0].tolist(), label="$|X_w|$")
    if ann is not None:
        _annotation_lane(axes[1, 0], ann, scale)
    axes[-1, 0].set_xlabel(xlabel)
    _save(fig, path)


def plot_spectrum(path, spec):
    fig, ax = plt.subplots(figsize=(8, 3.5))
    ax.plot(spec.freqs, spec.amplitude, lw=0.8)
    if spec.f_L is not None:
        ax.axvspan(spec.f_L, spec.f_H, color="tab:orange", alpha=0.2,
                   label=f"{100 * spec.energy_fraction:.0f}% band")
        ax.legend()
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("amplitude")
    fig.tight_layout()
    _save(fig, path)


def plot_distribution(path, dist):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.stairs(dist.density, dist.bin_edges, fill=True, alpha=0.5, label="histogram")
    ax.plot(dist.bin_centers, dist.gaussian_ref, color="k", lw=1, label="Gaussian")
    ax.set_yscale("log")
    ax.set_xlabel("$v_r$")
    ax.set_ylabel("density")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)

"""Figure rendering for CLI reports. Imported only when figures are requested."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .species import k_B  # noqa: E402

DPI = 150


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def plot_array_depths(array, path):
    """Per-site depth map of the first lattice."""
    first = [s for s in array.sites if s.lattice == 0]
    depth = np.array([s.depth / k_B * 1e3 for s in first]).reshape(array.rows, array.cols)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    extent = np.array([-0.5, array.cols - 0.5, array.rows - 0.5, -0.5])
    im = ax.imshow(depth, cmap="viridis_r", extent=extent)
    ax.set_xlabel("column")
    ax.set_ylabel("row")
    ax.set_title(f"{array.n_trapped} trapped sites")
    fig.colorbar(im, ax=ax, label=r"$U_0/k_B$ (mK)")
    return _save(fig, path)


def plot_schedule(result, schedule, path):
    t = np.array([t for t, _ in result.offsets()])
    offset = np.array([o for _, o in result.offsets()])
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(t * 1e6, np.abs(offset) * 1e6, "o-", color="C0")
    ax.axhline(schedule.hold_separation * 1e6, color="C3", ls="--", lw=1, label="hold separation")
    for start, end in result.windows:
        ax.axvspan(start * 1e6, end * 1e6, color="C2", alpha=0.2)
    ax.set_xlabel(r"time ($\mu$s)")
    ax.set_ylabel(r"lattice separation ($\mu$m)")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_crosstalk(array, ratios, target, path):
    pos = np.array([s.position for s in array.sites])
    d = np.hypot(*(pos[:, :2] - pos[target, :2]).T)
    r = np.array([ratios[i] for i in range(len(array.sites))])
    fig, ax = plt.subplots(figsize=(5, 3.2))
    shown = r > 0
    ax.semilogy(d[shown] * 1e6, r[shown], "o", color="C0")
    ax.set_xlabel(r"distance from target ($\mu$m)")
    ax.set_ylabel("relative two-photon coupling")
    ax.set_title(f"{np.count_nonzero(~shown)} sites at exactly zero")
    return _save(fig, path)


def plot_readout(records, path):
    sites = [r["site"] for r in records]
    photons = [r["expected_photons"] for r in records]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(sites, photons, color="C1")
    ax.set_xlabel("site")
    ax.set_ylabel("expected detected photons")
    return _save(fig, path)


def plot_decay(counts, lifetime, amplitude, path, title=None):
    """Survival counts with the fitted exponential overlaid."""
    data = np.asarray(counts, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(data[:, 0] * 1e3, data[:, 1], "o", color="C0", label="counts")
    if lifetime is not None:
        t = np.linspace(0, data[:, 0].max(), 200)
        ax.plot(t * 1e3, amplitude * np.exp(-t / lifetime), color="C3",
                label=rf"fit, $\tau$ = {lifetime * 1e3:.1f} ms")
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("atoms remaining")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    return _save(fig, path)

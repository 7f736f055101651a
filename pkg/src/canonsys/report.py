"""Figure rendering for the batch reports.

Every CLI command that writes a report.json also renders a small matplotlib
summary figure next to it.  Figures are rendered through the Agg backend with
stripped metadata so repeated runs produce identical bytes.
"""

from __future__ import annotations

import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "figure.figsize": (7.0, 4.2),
    "figure.dpi": 130,
    "savefig.dpi": 130,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "legend.frameon": False,
}

_SAVE_KW = {"metadata": {"Software": None}, "bbox_inches": "tight"}


def _save(fig, path):
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def ladder_figure(path, ladder, keys, title, xlabel="E"):
    """Log-log medians (with quartile bands) of per-E statistics."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        Es = [rung["E"] for rung in ladder]
        for key in keys:
            med = [rung[key]["p50"] for rung in ladder]
            lo = [rung[key]["p25"] for rung in ladder]
            hi = [rung[key]["p75"] for rung in ladder]
            ax.plot(Es, med, "o-", label=key)
            ax.fill_between(Es, lo, hi, alpha=0.2)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("statistic")
        ax.set_title(title)
        ax.legend()
        _save(fig, path)


def paths_figure(path, grid, curves, title, xlabel="t"):
    """Overlayed trajectories (label -> array) against one grid."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for label, ys in curves.items():
            step = max(1, len(grid) // 4000)
            ax.plot(grid[::step], ys[::step], label=label)
        ax.set_xlabel(xlabel)
        ax.set_title(title)
        ax.legend()
        _save(fig, path)


def hbm_figure(path, hbm, title="hyperbolic Brownian motion"):
    with plt.rc_context(RC):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.0))
        step = max(1, len(hbm.s_grid) // 4000)
        ax1.plot(hbm.re[::step], hbm.im[::step], lw=0.8)
        ax1.plot([0], [1], "ko", ms=4)
        ax1.set_xlabel("Re")
        ax1.set_ylabel("Im")
        ax1.set_yscale("log")
        ax1.set_title("trajectory in the upper half-plane")
        ax2.plot(hbm.s_grid[::step], hbm.im[::step])
        ax2.set_yscale("log")
        ax2.set_xlabel("s")
        ax2.set_ylabel("Im")
        ax2.set_title("imaginary part (geometric BM)")
        fig.suptitle(title)
        _save(fig, path)


def spectrum_figure(path, locations, weights, window, title="spectral measure"):
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        if len(locations):
            ax.stem(locations, weights)
        ax.set_xlim(window)
        ax.set_xlabel("lambda")
        ax.set_ylabel("weight")
        ax.set_title(title)
        _save(fig, path)


def weights_figure(path, weights, beta, title="pooled spectral weights"):
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ws = np.asarray(weights, dtype=float)
        if len(ws):
            ax.hist(ws, bins=40, density=True, alpha=0.6, label="samples")
            xs = np.linspace(0, max(ws.max(), 8.0), 300)
            if math.isfinite(beta):
                k, theta = beta / 2.0, 4.0 / beta
                from scipy.stats import gamma
                ax.plot(xs, gamma.pdf(xs, k, scale=theta), "k-",
                        label=f"Gamma(shape {k:g}, scale {theta:g})")
        ax.set_xlabel("weight")
        ax.set_ylabel("density")
        ax.set_title(title)
        ax.legend()
        _save(fig, path)


def asymptotics_figure(path, log_t, mean_r, slope, intercept, expected, angles,
                       title="negative-axis asymptotics"):
    with plt.rc_context(RC):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.0))
        ax1.plot(log_t, mean_r, "o", ms=3, label="mean log-amplitude")
        ax1.plot(log_t, slope * np.asarray(log_t) + intercept, "-",
                 label=f"fit slope {slope:.3f} (expect {expected:.3f})")
        ax1.set_xlabel("log t")
        ax1.set_ylabel("mean r(t) - r(1)")
        ax1.legend()
        ax2.hist(np.mod(angles, 2 * math.pi), bins=24, density=True, alpha=0.6)
        ax2.axhline(1.0 / (2 * math.pi), color="k", ls="--", label="uniform")
        ax2.set_xlabel("phase mod 2 pi")
        ax2.set_ylabel("density")
        ax2.legend()
        fig.suptitle(title)
        _save(fig, path)


def oracle_figure(path, edge_max, beta, title="tridiagonal model, edge statistics"):
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.hist(edge_max, bins=30, density=True, alpha=0.6, label="largest rescaled eigenvalue")
        ax.axvline(np.mean(edge_max), color="k", ls="--",
                   label=f"sample mean {np.mean(edge_max):.3f}")
        ax.set_xlabel("2 N^{2/3} (lambda - 1)")
        ax.set_ylabel("density")
        ax.set_title(title)
        ax.legend()
        _save(fig, path)

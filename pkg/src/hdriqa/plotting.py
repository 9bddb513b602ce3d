"""Diagnostic figures written next to the JSON reports.

Only imported when a ``--figure`` path is requested, so the core library
never pulls in matplotlib.
"""

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .display import scene_luminance  # noqa: E402
from .metrics import get_metric  # noqa: E402

FIG_WIDTH = 7.0
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

_STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def _save(fig, path):
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_window_plan(hdr, plan, stack, path, model=None):
    """Log-luminance histogram with the window positions, plus the rendered stack."""
    with plt.rc_context(_STYLE):
        k = plan.count
        fig = plt.figure(figsize=(FIG_WIDTH, FIG_WIDTH * GOLDEN + 1.0))
        grid = fig.add_gridspec(2, k, height_ratios=[1.0, 1.2])
        ax = fig.add_subplot(grid[0, :])
        lum = scene_luminance(hdr).ravel()
        lum = np.log2(lum[lum > 0])
        ax.hist(lum, bins=80, color="0.4")
        width = model.window_size_stops() if model is not None else 8.0
        colors = plt.cm.viridis(np.linspace(0.15, 0.85, k))
        for i, (end, c) in enumerate(zip(plan.endpoints, colors), start=1):
            ax.axvspan(end - width, end, color=c, alpha=0.18)
            ax.axvline(end, color=c, lw=1.2, label=f"window {i}")
        ax.axvline(plan.l0, color="k", ls="--", lw=0.8)
        ax.axvline(plan.l1, color="k", ls="--", lw=0.8)
        ax.set_xlabel("log2 luminance (stops)")
        ax.set_ylabel("pixels")
        ax.legend(loc="upper left", frameon=False)
        for i, (v, im) in enumerate(stack):
            a = fig.add_subplot(grid[1, i])
            a.imshow(im.data, interpolation="nearest")
            a.set_title(f"k={i + 1}, v={v:.4g}")
            a.axis("off")
        return _save(fig, path)


def plot_window_scores(report, path):
    """Per-window pooled score before and after exposure compensation."""
    metric = get_metric(report.metric)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(FIG_WIDTH * 0.7, FIG_WIDTH * 0.7 * GOLDEN))
        ks = np.arange(1, len(report.windows) + 1)
        before = [metric.finalize(w.uncompensated) for w in report.windows]
        after = [metric.finalize(w.score) for w in report.windows]
        ax.bar(ks - 0.2, before, width=0.4, color="0.6", label="v_hat = v")
        ax.bar(ks + 0.2, after, width=0.4, color="C0", label="optimized v_hat")
        for k, w, y in zip(ks, report.windows, after):
            ax.annotate(f"{w.shift_stops:+.2f}", (k + 0.2, y), ha="center", va="bottom",
                        fontsize=7)
        ax.set_xticks(ks)
        ax.set_xlabel("window k")
        ax.set_ylabel(f"{report.metric} score")
        ax.set_title(f"Q = {report.score:.4g}")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_logistic_fit(scores, mos, fit, path, title=""):
    """MOS against objective scores with the fitted logistic curve."""
    scores = np.asarray(scores, dtype=np.float64)
    mos = np.asarray(mos, dtype=np.float64)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(FIG_WIDTH * 0.7, FIG_WIDTH * 0.7 * GOLDEN))
        ax.scatter(scores, mos, s=12, color="C0", edgecolors="none")
        if fit is not None:
            xs = np.linspace(scores.min(), scores.max(), 200)
            ax.plot(xs, fit(xs), color="C3", lw=1.2)
        ax.set_xlabel("objective score")
        ax.set_ylabel("MOS")
        if title:
            ax.set_title(title)
        return _save(fig, path)

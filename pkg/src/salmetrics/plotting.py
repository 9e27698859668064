"""Matplotlib rendering for maps, ROC level sets and the report figures.

Everything draws on the Agg backend and writes straight to a file.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 120,
    "savefig.bbox": "tight",
}


def _save(fig, path):
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def save_heatmap(path, grid, cmap: str = "viridis") -> None:
    """Single-channel heat map, one output pixel per grid cell."""
    g = np.asarray(grid, dtype=float)
    lo, hi = g.min(), g.max()
    plt.imsave(path, g, cmap=cmap, vmin=lo, vmax=hi if hi > lo else lo + 1, metadata={"Software": None})


def save_diverging(path, grid) -> None:
    """Red for negative, blue for positive, symmetric about zero."""
    g = np.asarray(grid, dtype=float)
    m = float(np.abs(g).max()) or 1.0
    plt.imsave(path, g, cmap="RdBu", vmin=-m, vmax=m, metadata={"Software": None})


def emd_rgb(outflow, inflow) -> np.ndarray:
    """Outflow in green, inflow in red, brightness proportional to value."""
    top = max(float(np.max(outflow)), float(np.max(inflow))) or 1.0
    rgb = np.zeros(outflow.shape + (3,))
    rgb[..., 0] = inflow / top
    rgb[..., 1] = outflow / top
    return rgb


def save_emd_flow(path, outflow, inflow) -> None:
    plt.imsave(path, emd_rgb(outflow, inflow), metadata={"Software": None})


def save_level_sets(path, S, Q, level_sets, curve, title: str = "") -> None:
    """Level-set panels with hits (green) and misses (red), plus the ROC curve."""
    ys, xs = np.nonzero(Q.mask)
    k = len(level_sets)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, k + 1, figsize=(2.0 * (k + 1), 2.2))
        for ax, ls in zip(axes, level_sets):
            ax.imshow(ls.mask, cmap="gray", vmin=0, vmax=1)
            ax.scatter(xs[ls.hits], ys[ls.hits], s=6, c="#2ca02c")
            ax.scatter(xs[~ls.hits], ys[~ls.hits], s=6, c="#d62728")
            ax.set_title(f"TP {ls.tp_rate:.2f} FP {ls.fp_rate:.2f}")
            ax.set_axis_off()
        ax = axes[-1]
        ax.plot(curve.fp_rate, curve.tp_rate, color="k", lw=1)
        ax.plot([ls.fp_rate for ls in level_sets], [ls.tp_rate for ls in level_sets], "o", ms=3)
        ax.plot([0, 1], [0, 1], ":", color="0.5", lw=0.8)
        ax.set_xlabel("FP rate")
        ax.set_ylabel("TP rate")
        ax.set_title(f"AUC {curve.area():.3f}")
        ax.set_aspect("equal")
        if title:
            fig.suptitle(title)
        _save(fig, path)


def plot_fit(path, ns, scores, fit, metric: str) -> None:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.4, 2.5))
        ax.plot(ns, scores, "o", ms=3, color="k", label="n vs n observers")
        grid = np.linspace(min(ns), max(ns) * 3, 200)
        ax.plot(grid, fit.predict(grid), color="C0", lw=1, label=f"fit, limit {fit.c:.3f}")
        ax.axhspan(fit.ci_low, fit.ci_high, color="C0", alpha=0.15, lw=0)
        ax.set_xlabel("observers per group")
        ax.set_ylabel(metric)
        ax.legend(frameon=False)
        _save(fig, path)


def plot_matrix(path, metrics, matrix) -> None:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(0.45 * len(metrics) + 1.5, 0.45 * len(metrics) + 1))
        im = ax.imshow(matrix, vmin=-1, vmax=1, cmap="RdBu_r")
        ax.set_xticks(range(len(metrics)), metrics, rotation=45, ha="right")
        ax.set_yticks(range(len(metrics)), metrics)
        for i in range(len(metrics)):
            for j in range(len(metrics)):
                ax.text(j, i, f"{matrix[i, j]:.2f}", ha="center", va="center", fontsize=6)
        fig.colorbar(im, ax=ax, fraction=0.046)
        _save(fig, path)


def plot_sweep(path, rows, parameter: str, ground_truth_value=None) -> None:
    metrics = list(dict.fromkeys(r["metric"] for r in rows))
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(metrics), figsize=(1.8 * len(metrics), 1.8), squeeze=False)
        for ax, m in zip(axes[0], metrics):
            sel = [r for r in rows if r["metric"] == m]
            x = [r["param_value"] for r in sel]
            y = [r["mean"] for r in sel]
            ax.plot(x, y, color="k", lw=1)
            if ground_truth_value is not None:
                ax.axvline(ground_truth_value, color="r", ls=":", lw=0.8)
            if m in ("kl", "emd", "kl_sym"):
                ax.invert_yaxis()
            ax.set_title(m)
            ax.set_xlabel(parameter)
        fig.tight_layout()
        _save(fig, path)


def plot_ablation(path, rows) -> None:
    metrics = list(dict.fromkeys(r["metric"] for r in rows))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 2.5))
        for m in metrics:
            sel = [r for r in rows if r["metric"] == m]
            ax.plot([100 * r["fraction"] for r in sel], [r["chance_normalized"] for r in sel], "o-", ms=3, lw=1, label=m)
        ax.axhline(100, color="0.5", ls=":", lw=0.8)
        ax.set_xlabel("false negatives (%)")
        ax.set_ylabel("chance-normalised drop (%)")
        ax.legend(frameon=False, ncol=2)
        _save(fig, path)

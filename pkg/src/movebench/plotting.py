from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
from matplotlib import pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .datagen import CIRCLE_RADIUS  # noqa: E402


def setup_plt():
    plt.rcParams["figure.dpi"] = 120
    plt.rcParams["font.size"] = 8
    plt.rcParams["axes.titlesize"] = 9
    plt.rcParams["figure.constrained_layout.use"] = True


def save_fig(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight", pad_inches=0.02)
    plt.close(fig)
    return path


def plot_heatmap(report, path, title: str | None = None, circle: bool = True) -> Path:
    """Per-cell success fraction over the object start grid."""
    setup_plt()
    frac = np.divide(report.successes, report.attempts, out=np.full(report.attempts.shape, np.nan), where=report.attempts > 0)
    h = report.half_extent
    fig, ax = plt.subplots(figsize=(3.2, 2.8))
    im = ax.imshow(frac, origin="lower", extent=(-h, h, -h, h), vmin=0.0, vmax=1.0, cmap="viridis")
    if circle:
        ax.add_patch(plt.Circle((0.0, 0.0), CIRCLE_RADIUS, fill=False, ls="--", lw=0.8, color="w"))
    ax.set_xlabel("object x (m)")
    ax.set_ylabel("object y (m)")
    ax.set_title(title or f"success {report.success_rate:.1%}  (level {report.level})")
    fig.colorbar(im, ax=ax, shrink=0.85, label="success rate")
    return save_fig(fig, path)


def plot_comparison(report, path) -> Path:
    """Mean +- std success per arm across seeds."""
    setup_plt()
    arms = [a for a in report.arms if a.runs]
    names = [a.arm.name for a in arms]
    means = [a.mean() for a in arms]
    stds = [a.std() for a in arms]
    fig, ax = plt.subplots(figsize=(0.7 * max(len(arms), 2) + 1.5, 2.6))
    ax.bar(range(len(arms)), means, yerr=stds, capsize=3, color="0.55", edgecolor="0.2")
    ax.set_xticks(range(len(arms)), names, rotation=20, ha="right")
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("success rate")
    ax.set_title(f"{report.experiment}  (budget {report.budget}, {len(report.seeds)} seeds)")
    for i, m in enumerate(means):
        ax.text(i, min(m + 0.03, 0.95), f"{m:.2f}", ha="center", fontsize=7)
    return save_fig(fig, path)

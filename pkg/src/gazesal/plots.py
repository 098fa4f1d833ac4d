"""Figure rendering for the CLI report paths.

Every report command emits delimited text as its primary artifact; these
helpers optionally render a matplotlib figure of the same data to a file
(--figure flag). Uses the Agg backend so no display is needed.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_rank_figure(ranking, path):
    """Bar chart of global salience scores in rank order."""
    ids = [str(i) for i, _ in ranking]
    scores = [s for _, s in ranking]
    fig, ax = plt.subplots(figsize=(max(6, 0.25 * len(ids)), 4))
    ax.bar(range(len(ids)), scores, color="steelblue")
    ax.set_xticks(range(len(ids)))
    ax.set_xticklabels(ids, rotation=90, fontsize=7)
    ax.set_xlabel("image id")
    ax.set_ylabel("global salience score")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_cv_figure(mean_acc: dict, best_c: float, path):
    """Validation accuracy against the regularization grid."""
    cs = sorted(mean_acc)
    accs = [mean_acc[c] for c in cs]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(cs, accs, "o-", color="steelblue")
    ax.axvline(best_c, color="firebrick", linestyle="--",
               label=f"selected C = {best_c:g}")
    ax.set_xlabel("C (inverse regularization strength)")
    ax.set_ylabel("mean validation accuracy")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_metrics_figure(report, path):
    """Per-fold metric distributions as box plots."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.boxplot([report.auc_folds, report.tjur_folds, report.acc_folds],
               tick_labels=["AUC", "Tjur R2", "accuracy"])
    ax.set_ylabel("metric value")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_bootstrap_figure(result, path):
    """Histogram of resampled means with the 95% interval marked."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(result.resampled_means, bins=50, color="steelblue", alpha=0.8)
    ax.axvline(result.ci_low, color="firebrick", linestyle="--")
    ax.axvline(result.ci_high, color="firebrick", linestyle="--")
    ax.axvline(0.0, color="black", linewidth=1)
    ax.set_xlabel("resampled mean")
    ax.set_ylabel("count")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_matrix_figure(matrix: np.ndarray, path, title: str = "",
                       cmap: str = "viridis"):
    """Heat map of a correlation or dissimilarity matrix."""
    fig, ax = plt.subplots(figsize=(5.5, 5))
    im = ax.imshow(np.asarray(matrix), cmap=cmap)
    fig.colorbar(im, ax=ax, shrink=0.85)
    if title:
        ax.set_title(title)
    ax.set_xlabel("predicted image")
    ax.set_ylabel("measured image")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_grid_figure(grid, path, title: str = ""):
    """Heat map of a salience grid or density map."""
    fig, ax = plt.subplots(figsize=(5.5, 5))
    im = ax.imshow(grid.values, cmap="inferno", origin="upper")
    fig.colorbar(im, ax=ax, shrink=0.85)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

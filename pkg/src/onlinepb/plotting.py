"""Matplotlib output for experiment reports.

Figures are rendered straight to file next to the CSV output; no
interactive backend is required.  PNG metadata is pinned so reruns with
the same config produce byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

RC = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "font.size": 10,
}

_PNG_METADATA = {"Software": "onlinepb"}


def _save(fig, path):
    fig.savefig(path, metadata=_PNG_METADATA, bbox_inches="tight")
    plt.close(fig)


def plot_traces(curves: dict, path: str, title: str = ""):
    """Average cumulative loss curves, one line per algorithm.

    ``curves`` maps a label to a 1-d array of per-step averaged
    cumulative losses.
    """
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for label, values in curves.items():
            steps = np.arange(1, len(values) + 1)
            ax.plot(steps, values, label=label, linewidth=1.2)
        ax.set_xlabel("step")
        ax.set_ylabel("average cumulative loss")
        if title:
            ax.set_title(title)
        ax.legend()
        _save(fig, path)


def plot_error_bars(tables: dict, path: str, title: str = ""):
    """Checkpoint mean +- std per algorithm.

    ``tables`` maps a label to (checkpoints, means, stds) arrays.
    """
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for label, (checkpoints, means, stds) in tables.items():
            ax.errorbar(checkpoints, means, yerr=stds, label=label,
                        marker="o", markersize=3, capsize=3, linewidth=1.2)
        ax.set_xlabel("step")
        ax.set_ylabel("average cumulative loss")
        if title:
            ax.set_title(title)
        ax.legend()
        _save(fig, path)


def plot_bounds(reports: list, path: str, title: str = ""):
    """Stacked bar per bound report: empirical term vs penalty terms."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        labels = [r.bound for r in reports]
        empirical = [r.empirical for r in reports]
        penalty = [r.penalty for r in reports]
        pos = np.arange(len(reports))
        ax.bar(pos, empirical, label="empirical")
        ax.bar(pos, penalty, bottom=empirical, label="penalty")
        ax.set_xticks(pos)
        ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
        ax.set_ylabel("bound value")
        if title:
            ax.set_title(title)
        ax.legend()
        _save(fig, path)


def plot_coverage(result, path: str):
    """Per-repetition LHS vs RHS scatter for a coverage experiment."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        lim = [min(result.lhs.min(), result.rhs.min()),
               max(result.lhs.max(), result.rhs.max())]
        ax.plot(lim, lim, color="gray", linewidth=0.8)
        ax.scatter(result.rhs, result.lhs, s=12, alpha=0.6)
        ax.set_xlabel("bound (RHS)")
        ax.set_ylabel("estimated conditional risk sum (LHS)")
        ax.set_title(
            f"{result.bound}: coverage {result.coverage:.3f} "
            f"(target >= {1 - result.delta:.2f})")
        _save(fig, path)

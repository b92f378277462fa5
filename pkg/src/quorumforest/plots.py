"""Figures written next to the tabular reports."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .data import FeatureSpace  # noqa: E402
from .evalx import DISPLAY, MetricsRow  # noqa: E402
from .rules import Rule  # noqa: E402

PANELS = (("L", "rule length"), ("C", "coverage"), ("P", "precision"), ("T", "seconds / instance"))


def plot_metrics(rows: Sequence[MetricsRow], path: str | Path) -> Path:
    names = [DISPLAY.get(r.strategy, r.strategy) for r in rows]
    fig, axes = plt.subplots(1, len(PANELS), figsize=(3.0 * len(PANELS), 3.0))
    xs = np.arange(len(rows))
    for ax, (key, label) in zip(axes, PANELS):
        means = [getattr(r, f"{key}_mean") for r in rows]
        stds = [getattr(r, f"{key}_std") for r in rows]
        ax.bar(xs, means, yerr=stds, capsize=3, color="0.6", edgecolor="k", linewidth=0.6)
        ax.set_xticks(xs, names)
        ax.set_title(label, fontsize=9)
        ax.tick_params(labelsize=8)
        if key in ("C", "P"):
            ax.set_ylim(0, 1.05)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_rules(rules: Sequence[Rule], space: FeatureSpace, instance, label_names: Sequence[str],
               path: str | Path) -> Path:
    """One panel per rule: each range drawn on its feature's domain, instance marked."""
    x = np.asarray(instance, dtype=float)
    if not rules:
        raise ValueError("nothing to plot")
    height = 0.6 + sum(0.5 + 0.3 * len(r.ranges) for r in rules)
    fig, axes = plt.subplots(len(rules), 1, figsize=(6.0, height), squeeze=False)
    for ax, rule in zip(axes[:, 0], rules):
        ys = np.arange(len(rule.ranges))
        for y, r in zip(ys, rule.ranges):
            lo, hi = space.domain(r.feature)
            span = (hi - lo) or 1.0
            ax.plot([0, 1], [y, y], color="0.85", linewidth=6, solid_capstyle="butt")
            ax.plot([(r.low - lo) / span, (r.high - lo) / span], [y, y], color="k", linewidth=6,
                    solid_capstyle="butt")
            ax.plot([(x[r.feature] - lo) / span], [y], "o", color="tab:red", markersize=4)
        ax.set_yticks(ys, [space.names[r.feature] for r in rule.ranges], fontsize=7)
        ax.set_xlim(-0.02, 1.02)
        ax.set_xticks([])
        ax.set_title("then " + " ".join(label_names[i] for i in rule.labels), fontsize=8, loc="left")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path

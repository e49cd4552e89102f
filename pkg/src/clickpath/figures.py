"""Matplotlib renderings that accompany the delimited report outputs."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .patterns import ClickGraph, PatternReport


def fraction_curve_figure(
    points: Sequence[tuple[float, float]], out_path: str | Path
) -> None:
    """Accuracy vs observed-context fraction, with the 25% reference line."""
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    ax.plot(xs, ys, marker="o", color="#1f77b4")
    ax.axhline(0.25, color="#999999", linestyle="--", linewidth=1, label="25% reference")
    ax.set_xlabel("fraction of action path observed")
    ax.set_ylabel("mean greedy accuracy")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="lower right", frameon=False)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def loss_history_figure(history: Sequence[dict], out_path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    epochs = [h["epoch"] for h in history]
    ax.plot(epochs, [h["train_loss"] for h in history], label="train")
    ax.plot(epochs, [h["val_loss"] for h in history], label="validation")
    ax.set_xlabel("epoch")
    ax.set_ylabel("cross-entropy")
    ax.set_yscale("log")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def class_boxplot_figure(
    values_by_class: dict[str, Sequence[float]], measure: str, out_path: str | Path
) -> None:
    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    labels = list(values_by_class)
    ax.boxplot([values_by_class[k] for k in labels], tick_labels=labels)
    ax.set_ylabel(measure)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def click_graph_figure(
    graphs: ClickGraph | Sequence[ClickGraph],
    report: PatternReport | None,
    out_path: str | Path,
) -> None:
    """Circular layout of the click graph with pattern roles highlighted.

    Nodes sit on a circle in first-visit order, sized by dwell; cluster
    members are filled, ring nodes orange, star roots double-ringed.
    """
    if isinstance(graphs, ClickGraph):
        graphs = [graphs]
    report = report or PatternReport()
    merged: dict[int, tuple[int, float]] = {}
    owners: dict[int, set[str]] = {}
    for g in graphs:
        for n, info in g.nodes.items():
            owners.setdefault(n, set()).add(g.owner)
            if n in merged:
                order, dwell = merged[n]
                merged[n] = (min(order, info.first_visit_order), dwell + info.total_dwell)
            else:
                merged[n] = (info.first_visit_order, info.total_dwell)
    nodes = sorted(merged, key=lambda n: merged[n][0])
    pos = {
        n: (math.cos(2 * math.pi * i / max(len(nodes), 1)),
            math.sin(2 * math.pi * i / max(len(nodes), 1)))
        for i, n in enumerate(nodes)
    }
    cluster_nodes = {n for c in report.clusters for n in c.nodes}
    ring_nodes = {n for r in report.directed_rings for n in r}
    leaf_nodes = {n for l in report.hesitation_leaves for n in l.nodes}
    star_roots = {s.root for s in report.breadth_stars}

    fig, ax = plt.subplots(figsize=(5.4, 5.4))
    edges: set[tuple[int, int]] = set()
    for g in graphs:
        edges.update(g.edges)
    for a, b in sorted(edges):
        if a == b:
            continue
        xa, ya = pos[a]
        xb, yb = pos[b]
        ax.annotate(
            "", xy=(xb, yb), xytext=(xa, ya),
            arrowprops=dict(arrowstyle="->", color="#bbbbbb", lw=0.8),
        )
    for n in nodes:
        order, dwell = merged[n]
        x, y = pos[n]
        if len(owners[n]) >= 2:
            color = "#000000"
        elif n in ring_nodes:
            color = "#ff7f0e"
        elif n in leaf_nodes:
            color = "#7f7f7f"
        elif n in cluster_nodes:
            color = "#2ca02c"
        else:
            color = "#1f77b4"
        size = 120 + 60 * math.log1p(max(dwell, 0.0))
        lw = 2.5 if n in star_roots else 0.8
        ax.scatter([x], [y], s=size, c=color, edgecolors="#333333", linewidths=lw, zorder=3)
        ax.annotate(str(order), (x, y), ha="center", va="center",
                    fontsize=7, color="white", zorder=4)
    ax.set_aspect("equal")
    ax.axis("off")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)

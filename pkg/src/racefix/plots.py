"""Report figures: bug count per iteration, lock-order graph, corpus overview.

Figures are written to files with the non-interactive Agg backend.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import networkx as nx  # noqa: E402

from .deadlock import LockOrderGraph  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.2),
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 120,
}


def bug_history_figure(history: Sequence[int], path, title: str = "") -> Path:
    """Step plot of the bug count before each iteration."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        xs = list(range(len(history)))
        ax.step(xs, history, where="post", color="tab:red")
        ax.plot(xs, history, "o", color="tab:red", ms=4)
        ax.set_xlabel("iteration")
        ax.set_ylabel("bugs")
        ax.set_xticks(xs)
        ax.set_ylim(bottom=0)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def lock_order_figure(graph: LockOrderGraph, path, title: str = "") -> Path:
    """The lock-order graph; edges on a cycle are drawn in red."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    g = graph.to_networkx()
    on_cycle = set()
    for c in nx.simple_cycles(g):
        if len(c) > 1:
            on_cycle |= {(c[i], c[(i + 1) % len(c)]) for i in range(len(c))}
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.set_axis_off()
        if g.number_of_nodes():
            pos = nx.circular_layout(sorted(g.nodes, key=str))
            labels = {n: str(n) for n in g.nodes}
            colors = ["tab:red" if e in on_cycle else "0.4" for e in g.edges]
            nx.draw_networkx_nodes(g, pos, ax=ax, node_color="white", edgecolors="0.2",
                                   node_size=900)
            nx.draw_networkx_labels(g, pos, labels, ax=ax, font_size=7)
            nx.draw_networkx_edges(g, pos, ax=ax, edge_color=colors, arrows=True,
                                   arrowsize=12, node_size=900,
                                   connectionstyle="arc3,rad=0.15")
        else:
            ax.text(0.5, 0.5, "no locks", ha="center", va="center")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def corpus_figure(names: Sequence[str], before: Sequence[int], iterations: Sequence[int],
                  path) -> Path:
    """Bugs found and iterations used per corpus program."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(5.0, 0.45 * len(names)), 3.2))
        xs = range(len(names))
        width = 0.4
        ax.bar([x - width / 2 for x in xs], before, width, label="bugs found")
        ax.bar([x + width / 2 for x in xs], iterations, width, label="iterations")
        ax.set_xticks(list(xs))
        ax.set_xticklabels(names, rotation=60, ha="right")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path

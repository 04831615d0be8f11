"""Figure rendering for the report paths.

Every CLI report command renders matplotlib figures next to its delimited
output (disable with --no-plots).  Figures are presentation copies of the
CSV/JSON data, written with fixed metadata and dpi so reruns are stable.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .diversity import KIVIAT_AXES

_SAVE_KW = dict(dpi=110, metadata={"Software": "nnbench"})


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def kiviat_figure(rows: list[dict], path) -> Path:
    """Radar grid: one panel per layer kind, one polygon per configuration."""
    kinds = sorted({r["kind"] for r in rows})
    ncols = 4
    nrows = max(1, math.ceil(len(kinds) / ncols))
    fig, axes = plt.subplots(nrows, ncols, figsize=(4 * ncols, 3.6 * nrows),
                             subplot_kw={"projection": "polar"})
    axes = np.atleast_1d(axes).ravel()
    angles = np.linspace(0, 2 * np.pi, len(KIVIAT_AXES), endpoint=False)
    closed = np.concatenate([angles, angles[:1]])
    for ax_i, kind in enumerate(kinds):
        ax = axes[ax_i]
        for r in sorted((r for r in rows if r["kind"] == kind),
                        key=lambda r: (r["config"], r["variant"])):
            vals = [r[a] if r[a] is not None else 0.0 for a in KIVIAT_AXES]
            vals = np.array(vals + vals[:1])
            label = r["config"] + ("" if r["variant"] == "dense" else f"+{r['variant']}")
            ax.plot(closed, vals, linewidth=1.0, label=label)
            ax.fill(closed, vals, alpha=0.05)
        ax.set_title(kind, fontsize=10)
        ax.set_xticks(angles)
        ax.set_xticklabels(KIVIAT_AXES, fontsize=6)
        ax.set_yticklabels([])
        ax.legend(fontsize=5, loc="upper right", bbox_to_anchor=(1.25, 1.1))
    for ax in axes[len(kinds):]:
        ax.set_visible(False)
    fig.suptitle("Normalized workload characteristics")
    fig.tight_layout()
    return _save(fig, path)


def _dendro_layout(node, x0=0.0, leaf_pos=None, segments=None):
    if leaf_pos is None:
        leaf_pos, segments = {}, []
    if node.is_leaf:
        y = len(leaf_pos)
        leaf_pos[node.name] = y
        return y, leaf_pos, segments
    ys = []
    for child in node.children:
        y, _, _ = _dendro_layout(child, x0, leaf_pos, segments)
        ys.append((y, child.height))
    y_mid = sum(y for y, _ in ys) / len(ys)
    for y, ch in ys:
        segments.append(((ch, y), (node.height, y)))         # horizontal
    segments.append(((node.height, ys[0][0]), (node.height, ys[-1][0])))  # vertical
    return y_mid, leaf_pos, segments


def dendrogram_figure(tree, path) -> Path:
    """Left-to-right dendrogram; x = linkage distance."""
    _, leaf_pos, segments = _dendro_layout(tree)
    fig, ax = plt.subplots(figsize=(7, 0.4 * max(6, len(leaf_pos))))
    for (x1, y1), (x2, y2) in segments:
        ax.plot([x1, x2], [y1, y2], color="tab:blue", linewidth=1.2)
    for name, y in leaf_pos.items():
        ax.text(0, y, " " + name, va="center", fontsize=8)
    ax.set_xlabel("linkage distance")
    ax.set_yticks([])
    ax.set_xscale("symlog")
    ax.spines[["top", "right", "left"]].set_visible(False)
    ax.set_title("Macro benchmark similarity")
    fig.tight_layout()
    return _save(fig, path)


def heatmap_figure(matrix, names, path) -> Path:
    n = len(names)
    grid = np.full((n, n), np.nan)
    for i in range(n):
        for j in range(n):
            if matrix[i][j] is not None:
                grid[i, j] = matrix[i][j]
    fig, ax = plt.subplots(figsize=(0.55 * n + 2, 0.55 * n + 1.5))
    im = ax.imshow(grid, vmin=-1, vmax=1, cmap="coolwarm")
    ax.set_xticks(range(n), names, rotation=90, fontsize=7)
    ax.set_yticks(range(n), names, fontsize=7)
    fig.colorbar(im, ax=ax, shrink=0.8, label="Pearson correlation")
    ax.set_title("Macro benchmark correlation")
    fig.tight_layout()
    return _save(fig, path)


def gops_bar_figure(cards: dict, path) -> Path:
    """Per-benchmark performance efficiency bars, one series per backend."""
    benches = sorted({
        r["benchmark"] for card in cards.values()
        for r in card.rows if r.get("status") == "ok"
    })
    if not benches:
        benches = ["(none)"]
    fig, ax = plt.subplots(figsize=(max(6, 0.3 * len(benches) + 2), 4))
    width = 0.8 / max(1, len(cards))
    for bi, (name, card) in enumerate(sorted(cards.items())):
        vals = {r["benchmark"]: r["gops"] for r in card.rows if r.get("status") == "ok"}
        xs = np.arange(len(benches)) + bi * width
        ax.bar(xs, [vals.get(b, 0.0) for b in benches], width=width, label=name)
    ax.set_yscale("log")
    ax.set_ylabel("GOPS")
    ax.set_xticks(np.arange(len(benches)) + 0.4 - width / 2,
                  benches, rotation=90, fontsize=6)
    ax.legend(fontsize=8)
    ax.set_title("Performance efficiency by benchmark")
    fig.tight_layout()
    return _save(fig, path)


def mpr_bar_figure(rows: list[dict], path) -> Path:
    """Misprediction ratio per (kind, config) from characterization rows."""
    sel = [r for r in rows if r.get("mpr") is not None]
    fig, ax = plt.subplots(figsize=(max(6, 0.25 * len(sel) + 2), 4))
    labels = [f"{r['kind']}/{r['config']}" for r in sel]
    ax.bar(range(len(sel)), [r["mpr"] for r in sel], color="tab:orange")
    ax.set_xticks(range(len(sel)), labels, rotation=90, fontsize=6)
    ax.set_ylabel("MPR")
    ax.set_title("Branch misprediction ratio (modeled predictor)")
    fig.tight_layout()
    return _save(fig, path)

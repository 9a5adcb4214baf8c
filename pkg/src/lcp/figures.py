"""Matplotlib renderings of report artifacts.

Every plot is written next to its delimited counterpart (CSV/TSV/JSON stay
the machine interchange; the PNGs are for eyeballing results).
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .attention import AttentionDump, HeadCorrelationGrid

DPI = 150


def plot_head_correlation_grid(
    grid: HeadCorrelationGrid, path: Union[str, Path], title: str = "word frequency vs received attention"
) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 6))
    data = np.ma.masked_invalid(grid.values)
    im = ax.imshow(data, cmap="RdBu_r", vmin=-1.0, vmax=1.0, aspect="auto")
    ax.set_xlabel("head")
    ax.set_ylabel("layer")
    ax.set_xticks(range(grid.n_heads))
    ax.set_yticks(range(grid.n_layers))
    ax.set_title(title)
    fig.colorbar(im, ax=ax, label="Pearson r")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def plot_attention_map(
    dump: AttentionDump, layer: int, head: int, path: Union[str, Path]
) -> Path:
    path = Path(path)
    A = dump.attention[layer, head]
    n = len(dump.bpe_tokens)
    fig, ax = plt.subplots(figsize=(max(4, n * 0.4), max(4, n * 0.4)))
    im = ax.imshow(A, cmap="viridis", vmin=0.0)
    ax.set_xticks(range(n))
    ax.set_yticks(range(n))
    ax.set_xticklabels(dump.bpe_tokens, rotation=90, fontsize=7)
    ax.set_yticklabels(dump.bpe_tokens, fontsize=7)
    ax.set_title(f"sample {dump.id}: layer {layer}, head {head}")
    fig.colorbar(im, ax=ax, label="attention")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def plot_feature_importances(
    importances: dict[str, float], path: Union[str, Path], top_n: int = 25
) -> Path:
    path = Path(path)
    items = sorted(importances.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]
    if not items:
        items = [("(no splits)", 0.0)]
    names = [k for k, _ in items][::-1]
    shares = [v for _, v in items][::-1]
    fig, ax = plt.subplots(figsize=(8, max(3, 0.3 * len(items))))
    ax.barh(range(len(names)), shares, color="#2a7e43")
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names, fontsize=8)
    ax.set_xlabel("split-gain share")
    ax.set_title("feature importances")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def plot_predictions_scatter(
    pred: Sequence[float],
    truth: Sequence[float],
    path: Union[str, Path],
    label: str = "",
    pearson_r: Optional[float] = None,
) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(truth, pred, s=8, alpha=0.5, color="#1f77b4", edgecolors="none")
    lo = min(min(truth), min(pred), 0.0)
    hi = max(max(truth), max(pred), 1.0)
    ax.plot([lo, hi], [lo, hi], color="grey", linewidth=0.8, linestyle="--")
    ax.set_xlabel("gold complexity")
    ax.set_ylabel("predicted complexity")
    title = label or "predictions"
    if pearson_r is not None:
        title += f" (r={pearson_r:.4f})"
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def plot_cv_scores(
    fold_scores: Sequence[Optional[float]], path: Union[str, Path], label: str = "cross-validation"
) -> Path:
    path = Path(path)
    xs = range(1, len(fold_scores) + 1)
    ys = [s if s is not None else np.nan for s in fold_scores]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(xs, ys, color="#b06a1f")
    ax.set_xlabel("fold")
    ax.set_ylabel("Pearson r")
    ax.set_xticks(list(xs))
    ax.set_ylim(0.0, 1.0)
    ax.set_title(label)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path

"""Figure rendering for harness outputs: mask heatmaps, curves, tables.

Every figure is written next to the CSV it visualizes, using the Agg
backend (no display required).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import AblationTable
from .model import ModelParams
from .train import History

plt.rcParams.update({
    "figure.dpi": 120,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
})


def save_mask_heatmaps(
    params: ModelParams, out_dir: Path | str, prefix: str = "mask"
) -> list[Path]:
    """One heatmap PNG per scale next to the exported CSV grids."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, (sp, s) in enumerate(zip(params.scales, params.config.ladder.segment_lengths)):
        if sp.mask is None:
            continue
        fig, ax = plt.subplots(figsize=(5, 3.2))
        im = ax.imshow(sp.mask, aspect="auto", cmap="viridis", interpolation="nearest")
        ax.set_xlabel("frequency bin")
        ax.set_ylabel("time segment")
        ax.set_title(f"learned mask, scale {i} (segment length {s})")
        ax.grid(False)
        fig.colorbar(im, ax=ax, shrink=0.85)
        path = out_dir / f"{prefix}_scale{i}_seg{s}.png"
        fig.savefig(path, bbox_inches="tight")
        plt.close(fig)
        paths.append(path)
    return paths


def save_history_curve(history: History, path: Path | str) -> Path:
    """Train/validation MSE per epoch."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    epochs = [r.epoch for r in history.records]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(epochs, [r.train_mse for r in history.records], label="train MSE")
    ax.plot(epochs, [r.val_mse for r in history.records], label="validation MSE")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE")
    ax.set_yscale("log")
    ax.legend()
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def save_ablation_figure(table: AblationTable, path: Path | str) -> Path:
    """Seed-mean test MSE per horizon, one line per (variant, mask) row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    hs = list(table.horizons)
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    for (name, mask_on), row in sorted(table.cells.items()):
        style = "-" if mask_on else "--"
        label = name if mask_on else f"{name} (no mask)"
        ax.plot(hs, [row[h] for h in hs], style, marker="o", label=label)
    ax.set_xlabel("forecast horizon")
    ax.set_ylabel("test MSE")
    ax.set_title(f"ablation on {table.dataset}")
    ax.legend(fontsize=7)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def save_forecast_example(
    lookback: np.ndarray,
    target: np.ndarray,
    prediction: np.ndarray,
    path: Path | str,
    channel: int = 0,
) -> Path:
    """Context, truth, and forecast for one window's channel."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lb = lookback[:, channel]
    t_axis = np.arange(len(lb))
    f_axis = np.arange(len(lb), len(lb) + target.shape[0])
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.plot(t_axis, lb, label="look-back", lw=0.8)
    ax.plot(f_axis, target[:, channel], label="target", lw=0.9)
    ax.plot(f_axis, prediction[:, channel], label="forecast", lw=0.9)
    ax.set_xlabel("time step")
    ax.legend()
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path

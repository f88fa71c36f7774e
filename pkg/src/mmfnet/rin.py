"""Reversible instance-wise normalization (per window, per channel).

The default mode subtracts the per-channel mean of the look-back window and
adds it back after forecasting; optional std scaling divides by the
per-channel standard deviation as well. There are no learnable parameters.
This is distinct from (and applied on top of) dataset-level standardization
done by the data pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ShapeError

DEFAULT_EPS = 1e-8


@dataclass(frozen=True)
class RinState:
    """Per-window statistics needed to invert the normalization.

    ``scale`` is all ones when std scaling is off, so the inverse is always
    ``pred * scale + mean``.
    """

    mean: np.ndarray
    scale: np.ndarray
    eps: float = DEFAULT_EPS


def rin_forward(
    lookback: np.ndarray, use_std: bool = False, eps: float = DEFAULT_EPS
) -> tuple[np.ndarray, RinState]:
    """Normalize an (L, C) look-back window to zero mean per channel."""
    lookback = np.asarray(lookback, dtype=np.float64)
    if lookback.ndim != 2:
        raise ShapeError(f"rin_forward expects (L, C), got {lookback.shape}")
    mean = lookback.mean(axis=0)
    out = lookback - mean
    if use_std:
        scale = np.maximum(lookback.std(axis=0), eps)
        out = out / scale
    else:
        scale = np.ones_like(mean)
    return out, RinState(mean, scale, eps)


def rin_inverse(pred: np.ndarray, state: RinState) -> np.ndarray:
    """Map a forecast back to the window's original offset (and scale)."""
    pred = np.asarray(pred, dtype=np.float64)
    if pred.ndim != 2 or pred.shape[1] != state.mean.shape[0]:
        raise ShapeError(
            f"rin_inverse expects (H, {state.mean.shape[0]}), got {pred.shape}"
        )
    return pred * state.scale + state.mean

"""Loss, optimizers, training loop with validation-based selection, metrics.

The loop normalizes each window on the fly (per-window mean removal, see
:mod:`mmfnet.rin`) and computes the loss on *denormalized* predictions, so
parameters are optimized against the same quantity the evaluation reports.
Given (seed, config, data), every number produced here is deterministic.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ConfigError,
    EmptySplitError,
    NonFiniteGradientError,
    Rng,
    ShapeError,
    Window,
)
from .model import (
    ModelConfig,
    ModelParams,
    ParamGrads,
    backward_batch,
    forward_batch,
    init_params,
)
from .rin import DEFAULT_EPS

EVAL_CHUNK = 256


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 5e-3
    batch_size: int = 64
    max_epochs: int = 50
    patience: int = 5
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 1
    shuffle: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.patience < 0:
            raise ConfigError(f"patience must be >= 0, got {self.patience}")
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")


@dataclass(frozen=True)
class Metrics:
    mse: float
    mae: float
    n_windows: int
    n_points: int


@dataclass
class EpochRecord:
    epoch: int
    train_mse: float
    val_mse: float
    wall_ms: float


@dataclass
class History:
    records: list[EpochRecord] = field(default_factory=list)

    def loss_curve(self) -> list[tuple[int, float, float]]:
        """The deterministic part of the history (no wall-clock)."""
        return [(r.epoch, r.train_mse, r.val_mse) for r in self.records]

    def best_val_mse(self) -> float:
        return min(r.val_mse for r in self.records)

    def to_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for r in self.records:
                fh.write(
                    json.dumps(
                        {
                            "epoch": r.epoch,
                            "train_mse": r.train_mse,
                            "val_mse": r.val_mse,
                            "wall_ms": r.wall_ms,
                        }
                    )
                    + "\n"
                )


# ---------------------------------------------------------------------------
# Loss
# ---------------------------------------------------------------------------

def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over all elements and its exact gradient w.r.t. pred."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"pred shape {pred.shape} != target shape {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    grad = (2.0 / diff.size) * diff
    return loss, grad


# ---------------------------------------------------------------------------
# Optimizers
# ---------------------------------------------------------------------------

@dataclass
class OptState:
    """Per-tensor Adam moments; unused (empty) for plain SGD."""

    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def make_opt_state(params: ModelParams, cfg: TrainConfig) -> OptState:
    if cfg.optimizer == "sgd":
        return OptState()
    tensors = params.tensors()
    return OptState(0, [np.zeros_like(t) for t in tensors], [np.zeros_like(t) for t in tensors])


def step(
    params: ModelParams, grads: ParamGrads, opt_state: OptState, cfg: TrainConfig
) -> tuple[ModelParams, OptState]:
    """One deterministic optimizer update; parameters are updated in place."""
    gs = grads.tensors()
    ps = params.tensors()
    if len(gs) != len(ps):
        raise ShapeError(f"{len(gs)} gradient tensors for {len(ps)} parameters")
    for g in gs:
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError("gradient contains NaN/Inf")
    if cfg.optimizer == "sgd":
        for p, g in zip(ps, gs):
            p -= cfg.learning_rate * g
        return params, opt_state
    opt_state.t += 1
    bc1 = 1.0 - cfg.beta1**opt_state.t
    bc2 = 1.0 - cfg.beta2**opt_state.t
    for p, g, m, v in zip(ps, gs, opt_state.m, opt_state.v):
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * (g * g)
        p -= cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.eps)
    return params, opt_state


# ---------------------------------------------------------------------------
# Batched prediction pipeline (RIN -> model -> inverse RIN)
# ---------------------------------------------------------------------------

def _stack_windows(windows: list[Window], idx) -> tuple[np.ndarray, np.ndarray]:
    xb = np.stack([windows[i].lookback for i in idx])
    yb = np.stack([windows[i].target for i in idx])
    return xb, yb


def predict_batch(
    lookbacks: np.ndarray, params: ModelParams, use_std: bool = False
) -> np.ndarray:
    """Denormalized forecasts for a (B, L, C) stack of look-back windows."""
    n_batch, _, n_ch = lookbacks.shape
    mean = lookbacks.mean(axis=1)
    centered = lookbacks - mean[:, None, :]
    if use_std:
        scale = np.maximum(lookbacks.std(axis=1), DEFAULT_EPS)
        centered = centered / scale[:, None, :]
    rows = centered.transpose(0, 2, 1).reshape(n_batch * n_ch, -1)
    pred_rows, _ = forward_batch(rows, params)
    preds = pred_rows.reshape(n_batch, n_ch, -1).transpose(0, 2, 1)
    if use_std:
        preds = preds * scale[:, None, :]
    return preds + mean[:, None, :]


def _batch_loss_and_grads(
    xb: np.ndarray, yb: np.ndarray, params: ModelParams, use_std: bool
) -> tuple[float, ParamGrads]:
    n_batch, _, n_ch = xb.shape
    mean = xb.mean(axis=1)
    centered = xb - mean[:, None, :]
    if use_std:
        scale = np.maximum(xb.std(axis=1), DEFAULT_EPS)
        centered = centered / scale[:, None, :]
    rows = centered.transpose(0, 2, 1).reshape(n_batch * n_ch, -1)
    pred_rows, btrace = forward_batch(rows, params)
    preds = pred_rows.reshape(n_batch, n_ch, -1).transpose(0, 2, 1)
    if use_std:
        denorm = preds * scale[:, None, :] + mean[:, None, :]
    else:
        denorm = preds + mean[:, None, :]
    loss, grad = mse_loss(denorm, yb)
    if use_std:
        grad = grad * scale[:, None, :]
    grad_rows = grad.transpose(0, 2, 1).reshape(n_batch * n_ch, -1)
    return loss, backward_batch(btrace, grad_rows, params)


# ---------------------------------------------------------------------------
# Fit / evaluate
# ---------------------------------------------------------------------------

def fit(
    train_windows: list[Window],
    val_windows: list[Window],
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    rin_std: bool = False,
) -> tuple[ModelParams, History]:
    """Train with shuffled mini-batches; keep the best-validation parameters.

    Stops once validation MSE has not improved for more than
    ``patience`` consecutive epochs (patience=0 allows exactly one
    non-improving epoch past the best).
    """
    if not train_windows:
        raise EmptySplitError("training split has no windows")
    if not val_windows:
        raise EmptySplitError("validation split has no windows")
    rng = Rng(train_cfg.seed)
    params = init_params(model_cfg, rng.spawn())
    shuffle_rng = rng.spawn()
    opt_state = make_opt_state(params, train_cfg)
    history = History()
    best_params = params.copy()
    best_val = np.inf
    since_best = 0
    n_train = len(train_windows)
    for epoch in range(1, train_cfg.max_epochs + 1):
        tic = time.perf_counter()
        order = shuffle_rng.permutation(n_train) if train_cfg.shuffle else np.arange(n_train)
        sq_sum = 0.0
        seen = 0
        for lo in range(0, n_train, train_cfg.batch_size):
            idx = order[lo:lo + train_cfg.batch_size]
            xb, yb = _stack_windows(train_windows, idx)
            try:
                loss, grads = _batch_loss_and_grads(xb, yb, params, rin_std)
                params, opt_state = step(params, grads, opt_state, train_cfg)
            except NonFiniteGradientError as err:
                raise NonFiniteGradientError(
                    f"{err} (epoch {epoch}, batch starting at {lo})"
                ) from None
            sq_sum += loss * len(idx)
            seen += len(idx)
        if not all(np.all(np.isfinite(t)) for t in params.tensors()):
            raise NonFiniteGradientError(f"parameters diverged during epoch {epoch}")
        train_mse = sq_sum / seen
        val_mse = evaluate(val_windows, params, rin_std).mse
        wall_ms = (time.perf_counter() - tic) * 1000.0
        history.records.append(EpochRecord(epoch, train_mse, val_mse, wall_ms))
        if val_mse < best_val:
            best_val = val_mse
            best_params = params.copy()
            since_best = 0
        else:
            since_best += 1
            if since_best > train_cfg.patience:
                break
    return best_params, history


def evaluate(
    windows: list[Window], params: ModelParams, rin_std: bool = False
) -> Metrics:
    """Mean MSE/MAE over all (window, step, channel) points, order-invariant."""
    if not windows:
        raise EmptySplitError("cannot evaluate an empty window set")
    sq_sum = 0.0
    abs_sum = 0.0
    n_points = 0
    for lo in range(0, len(windows), EVAL_CHUNK):
        idx = range(lo, min(lo + EVAL_CHUNK, len(windows)))
        xb, yb = _stack_windows(windows, idx)
        diff = predict_batch(xb, params, rin_std) - yb
        sq_sum += float(np.sum(diff * diff))
        abs_sum += float(np.sum(np.abs(diff)))
        n_points += diff.size
    return Metrics(sq_sum / n_points, abs_sum / n_points, len(windows), n_points)

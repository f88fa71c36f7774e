"""Multi-scale masked frequency forecaster: forward pass and exact gradients.

One channel is forecast as

    pred = sum over scales s of
        idct_row( W_s @ flatten( dct_matrix(fragment(x, s)) * M_s ) + b_s )

where M_s is a learnable per-(segment, frequency) mask, W_s/b_s a linear
head mapping the length-L masked spectrum to H forecast coefficients, and
idct_row recovers the time domain. Channels share parameters (channel
independent). Every constituent map is linear, so the backward pass is
written out analytically from the forward trace.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .core import ConfigError, Rng, ScaleLadder, ShapeError, validate_ladder
from .transform import dct_basis

CHECKPOINT_MAGIC = b"MMFCKPT1"
CHECKPOINT_VERSION = 1


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelConfig:
    lookback_len: int
    horizon: int
    ladder: ScaleLadder
    mask_enabled: bool = True

    def __post_init__(self):
        object.__setattr__(
            self, "ladder", validate_ladder(self.lookback_len, self.ladder)
        )
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")


@dataclass
class ScaleParams:
    """Trainable tensors for one scale: mask (n, s) or None, head (H, L), bias (H,)."""

    mask: np.ndarray | None
    weight: np.ndarray
    bias: np.ndarray


@dataclass
class ModelParams:
    config: ModelConfig
    scales: list[ScaleParams]

    def tensors(self) -> list[np.ndarray]:
        """All trainable arrays in fixed (scale-major) order."""
        out = []
        for sp in self.scales:
            if sp.mask is not None:
                out.append(sp.mask)
            out.append(sp.weight)
            out.append(sp.bias)
        return out

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.config,
            [
                ScaleParams(
                    None if sp.mask is None else sp.mask.copy(),
                    sp.weight.copy(),
                    sp.bias.copy(),
                )
                for sp in self.scales
            ],
        )


@dataclass
class ScaleGrads:
    mask: np.ndarray | None
    weight: np.ndarray
    bias: np.ndarray


@dataclass
class ParamGrads:
    scales: list[ScaleGrads]

    def tensors(self) -> list[np.ndarray]:
        out = []
        for sg in self.scales:
            if sg.mask is not None:
                out.append(sg.mask)
            out.append(sg.weight)
            out.append(sg.bias)
        return out


def init_params(config: ModelConfig, rng: Rng) -> ModelParams:
    """All-ones masks (identity filter); W, b uniform in [-1/sqrt(L), 1/sqrt(L)].

    Draw order is fixed (per scale: weight row-major, then bias) so a seed
    fully determines the parameters.
    """
    lb, hz = config.lookback_len, config.horizon
    bound = 1.0 / np.sqrt(lb)
    scales = []
    for s, n in zip(config.ladder.segment_lengths, config.ladder.counts):
        mask = np.ones((n, s)) if config.mask_enabled else None
        weight = rng.uniforms(hz * lb, -bound, bound).reshape(hz, lb)
        bias = rng.uniforms(hz, -bound, bound)
        scales.append(ScaleParams(mask, weight, bias))
    return ModelParams(config, scales)


def param_count(params: ModelParams) -> int:
    """Exact number of trainable scalars."""
    return sum(t.size for t in params.tensors())


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------

@dataclass
class ForwardTrace:
    """Intermediates of one forward call, kept for backprop and inspection.

    Per scale: the raw spectra (n, s), the flattened masked spectrum (L,),
    and the head output (H,). Replaying the tail of the computation from
    these reproduces the prediction bitwise.
    """

    x: np.ndarray
    spectra: list[np.ndarray]
    masked_flat: list[np.ndarray]
    head_out: list[np.ndarray]
    prediction: np.ndarray


def _check_input(x: np.ndarray, config: ModelConfig) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != config.lookback_len:
        raise ShapeError(
            f"expected look-back vector of length {config.lookback_len}, got {x.shape}"
        )
    return x


def forward(x: np.ndarray, params: ModelParams) -> tuple[np.ndarray, ForwardTrace]:
    """Forecast one channel; returns (prediction (H,), trace)."""
    cfg = params.config
    x = _check_input(x, cfg)
    preds, bt = forward_batch(x[None, :], params)
    flat = [v[0] for v in bt.masked_flat]
    head_out = [
        (v[None, :] @ sp.weight.T + sp.bias)[0]
        for sp, v in zip(params.scales, flat)
    ]
    return preds[0], ForwardTrace(
        x, [s[0] for s in bt.spectra], flat, head_out, preds[0]
    )


def replay(trace: ForwardTrace, params: ModelParams) -> np.ndarray:
    """Recompute the prediction from traced intermediates (bitwise equal).

    Uses the same matrix operations forward() used, on the same values.
    """
    cfg = params.config
    g_h = dct_basis(cfg.horizon)
    pred = np.zeros((1, cfg.horizon))
    for sp, v in zip(params.scales, trace.masked_flat):
        u = v[None, :] @ sp.weight.T + sp.bias
        pred = pred + u @ g_h
    return pred[0]


def backward(trace: ForwardTrace, grad_out: np.ndarray, params: ModelParams) -> ParamGrads:
    """Exact parameter gradients for a loss whose output-gradient is grad_out.

    idct adjoint: du = G_H @ dy; head: dW = outer(du, v), db = du,
    dv = W.T @ du; mask: dM = spectrum * reshape(dv).
    """
    cfg = params.config
    grad_out = np.asarray(grad_out, dtype=np.float64)
    if grad_out.shape != (cfg.horizon,):
        raise ShapeError(f"grad_out must have shape ({cfg.horizon},), got {grad_out.shape}")
    bt = BatchTrace(
        [spec[None, :, :] for spec in trace.spectra],
        [v[None, :] for v in trace.masked_flat],
    )
    return backward_batch(bt, grad_out[None, :], params)


def forward_multichannel(window: np.ndarray, params: ModelParams) -> np.ndarray:
    """Apply the shared-parameter forecaster to each channel of (L, C)."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2 or window.shape[0] != params.config.lookback_len:
        raise ShapeError(
            f"expected ({params.config.lookback_len}, C) window, got {window.shape}"
        )
    preds, _ = forward_batch(window.T.copy(), params)
    return preds.T


# ---------------------------------------------------------------------------
# Batched paths (rows = window-channel pairs) used by training/evaluation
# ---------------------------------------------------------------------------

@dataclass
class BatchTrace:
    spectra: list[np.ndarray]      # (R, n, s) per scale
    masked_flat: list[np.ndarray]  # (R, L) per scale


def forward_batch(rows: np.ndarray, params: ModelParams) -> tuple[np.ndarray, BatchTrace]:
    """Forecast R independent channels at once; rows is (R, L)."""
    cfg = params.config
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != cfg.lookback_len:
        raise ShapeError(f"expected (R, {cfg.lookback_len}) rows, got {rows.shape}")
    n_rows = rows.shape[0]
    g_h = dct_basis(cfg.horizon)
    preds = np.zeros((n_rows, cfg.horizon))
    spectra, masked_flat = [], []
    for sp, s in zip(params.scales, cfg.ladder.segment_lengths):
        seg = rows.reshape(n_rows, -1, s)
        spec = seg @ dct_basis(s).T
        masked = spec * sp.mask if sp.mask is not None else spec
        v = masked.reshape(n_rows, -1)
        u = v @ sp.weight.T + sp.bias
        preds = preds + u @ g_h
        spectra.append(spec)
        masked_flat.append(v)
    return preds, BatchTrace(spectra, masked_flat)


def backward_batch(
    btrace: BatchTrace, grad_preds: np.ndarray, params: ModelParams
) -> ParamGrads:
    """Parameter gradients summed over all rows (channels share parameters)."""
    cfg = params.config
    g_h = dct_basis(cfg.horizon)
    gu_common = grad_preds @ g_h.T
    grads = []
    for sp, spec, v in zip(params.scales, btrace.spectra, btrace.masked_flat):
        gw = gu_common.T @ v
        gb = gu_common.sum(axis=0)
        gmask = None
        if sp.mask is not None:
            gv = gu_common @ sp.weight
            gmask = np.einsum("rns,rns->ns", spec, gv.reshape(spec.shape))
        grads.append(ScaleGrads(gmask, gw, gb))
    return ParamGrads(grads)


# ---------------------------------------------------------------------------
# Checkpoint container
# ---------------------------------------------------------------------------
#
# Layout (little-endian):
#   bytes 0-7   magic "MMFCKPT1"
#   bytes 8-11  uint32 header length K
#   bytes 12-(12+K)  UTF-8 JSON header:
#       {"version": 1,
#        "config": {"lookback_len", "horizon", "ladder", "mask_enabled"},
#        "extra": {...},
#        "tensors": [{"name": "scale0.mask", "shape": [n, s]}, ...]}
#   then raw float64 row-major data for each tensor, in header order.

def _tensor_manifest(params: ModelParams) -> list[tuple[str, np.ndarray]]:
    named = []
    for i, sp in enumerate(params.scales):
        if sp.mask is not None:
            named.append((f"scale{i}.mask", sp.mask))
        named.append((f"scale{i}.weight", sp.weight))
        named.append((f"scale{i}.bias", sp.bias))
    return named


def save_checkpoint(params: ModelParams, path, extra: dict | None = None) -> None:
    cfg = params.config
    named = _tensor_manifest(params)
    header = {
        "version": CHECKPOINT_VERSION,
        "config": {
            "lookback_len": cfg.lookback_len,
            "horizon": cfg.horizon,
            "ladder": list(cfg.ladder.segment_lengths),
            "mask_enabled": cfg.mask_enabled,
        },
        "extra": extra or {},
        "tensors": [{"name": name, "shape": list(t.shape)} for name, t in named],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for _, t in named:
            fh.write(np.ascontiguousarray(t, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[ModelParams, dict]:
    """Read a checkpoint; returns (params, extra-metadata dict)."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != CHECKPOINT_MAGIC:
            raise ConfigError(f"not a model checkpoint: {path}")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        if header["version"] != CHECKPOINT_VERSION:
            raise ConfigError(f"unsupported checkpoint version {header['version']}")
        cfg = ModelConfig(
            header["config"]["lookback_len"],
            header["config"]["horizon"],
            ScaleLadder(tuple(header["config"]["ladder"])),
            header["config"]["mask_enabled"],
        )
        tensors = {}
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ConfigError(f"truncated checkpoint: {path}")
            tensors[entry["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    scales = []
    for i in range(cfg.ladder.n_scales):
        scales.append(
            ScaleParams(
                tensors.get(f"scale{i}.mask"),
                tensors[f"scale{i}.weight"],
                tensors[f"scale{i}.bias"],
            )
        )
    params = ModelParams(cfg, scales)
    expected = [
        (n, s)
        for n, s in zip(cfg.ladder.counts, cfg.ladder.segment_lengths)
    ]
    for sp, (n, s) in zip(params.scales, expected):
        if sp.weight.shape != (cfg.horizon, cfg.lookback_len):
            raise ConfigError("checkpoint weight shape inconsistent with config")
        if sp.mask is not None and sp.mask.shape != (n, s):
            raise ConfigError("checkpoint mask shape inconsistent with config")
    return params, header["extra"]

"""Synthetic-data verification of the numerical core, no datasets required.

Four suites: DCT exactness (orthonormality + round-trip), analytic gradients
vs central finite differences, RIN round-trip, and mask-identity equivalence.
This is the install-verification path behind ``mmfnet selftest``.

``inject_dct_scale`` exists only for negative-control testing (a deliberate
scaling bug must make the round-trip suite fail); leave it at 1.0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Rng, ScaleLadder
from .model import (
    ModelConfig,
    ModelParams,
    ScaleParams,
    backward,
    forward,
    init_params,
)
from .rin import rin_forward, rin_inverse
from .transform import dct_basis, dct_row, idct_row


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str


def _dct_suite(inject_dct_scale: float = 1.0) -> SuiteResult:
    worst_ortho = 0.0
    for n in range(2, 65):
        g = dct_basis(n)
        worst_ortho = max(worst_ortho, float(np.abs(g.T @ g - np.eye(n)).max()))
    rng = Rng(2024)
    worst_rt = 0.0
    for i in range(200):
        n = 2 + rng.below(63)
        x = rng.uniforms(n, -5.0, 5.0)
        back = idct_row(dct_row(x) * inject_dct_scale)
        worst_rt = max(worst_rt, float(np.abs(back - x).max()))
    ok = worst_ortho < 1e-10 and worst_rt < 1e-10
    return SuiteResult(
        "dct-roundtrip",
        ok,
        f"max |G'G - I| = {worst_ortho:.2e}, max round-trip error = {worst_rt:.2e}",
    )


def _loss_for_fd(x: np.ndarray, y: np.ndarray, params: ModelParams) -> float:
    pred, _ = forward(x, params)
    d = pred - y
    return 0.5 * float(d @ d)


def _gradient_suite(n_seeds: int = 3, rel_tol: float = 1e-4) -> SuiteResult:
    h = 1e-5
    worst = 0.0
    for seed in range(1, n_seeds + 1):
        rng = Rng(seed)
        cfg = ModelConfig(8, 4, ScaleLadder((2, 8)), mask_enabled=True)
        params = init_params(cfg, rng.spawn())
        # nontrivial masks so mask gradients are exercised away from 1.0
        for sp in params.scales:
            sp.mask += rng.uniforms(sp.mask.size, -0.3, 0.3).reshape(sp.mask.shape)
        x = rng.uniforms(8, -1.0, 1.0)
        y = rng.uniforms(4, -1.0, 1.0)
        pred, trace = forward(x, params)
        grads = backward(trace, pred - y, params)
        for p_t, g_t in zip(params.tensors(), grads.tensors()):
            flat_p = p_t.ravel()
            flat_g = g_t.ravel()
            for j in range(flat_p.size):
                keep = flat_p[j]
                flat_p[j] = keep + h
                up = _loss_for_fd(x, y, params)
                flat_p[j] = keep - h
                down = _loss_for_fd(x, y, params)
                flat_p[j] = keep
                fd = (up - down) / (2 * h)
                err = abs(flat_g[j] - fd) / max(abs(fd), abs(flat_g[j]), 1e-8)
                worst = max(worst, err)
    return SuiteResult(
        "gradient-check", worst < rel_tol, f"max relative error = {worst:.2e}"
    )


def _rin_suite() -> SuiteResult:
    rng = Rng(7)
    worst_rt = 0.0
    worst_mean = 0.0
    for use_std in (False, True):
        for _ in range(50):
            x = rng.uniforms(720 * 7, -10.0, 10.0).reshape(720, 7)
            normed, state = rin_forward(x, use_std=use_std)
            worst_mean = max(worst_mean, float(np.abs(normed.mean(axis=0)).max()))
            worst_rt = max(worst_rt, float(np.abs(rin_inverse(normed, state) - x).max()))
    ok = worst_rt < 1e-12 and worst_mean < 1e-12
    return SuiteResult(
        "rin-roundtrip",
        ok,
        f"max round-trip error = {worst_rt:.2e}, max column mean = {worst_mean:.2e}",
    )


def _mask_identity_suite() -> SuiteResult:
    rng = Rng(11)
    cfg_on = ModelConfig(24, 6, ScaleLadder((2, 8, 24)), mask_enabled=True)
    cfg_off = ModelConfig(24, 6, ScaleLadder((2, 8, 24)), mask_enabled=False)
    params_on = init_params(cfg_on, rng.spawn())
    params_off = ModelParams(
        cfg_off, [ScaleParams(None, sp.weight, sp.bias) for sp in params_on.scales]
    )
    identical = True
    for _ in range(20):
        x = rng.uniforms(24, -3.0, 3.0)
        a, _ = forward(x, params_on)
        b, _ = forward(x, params_off)
        if not np.array_equal(a, b):
            identical = False
            break
    return SuiteResult(
        "mask-identity",
        identical,
        "all-ones mask output bitwise equal to mask-disabled output"
        if identical
        else "outputs differ",
    )


def run_selftest(inject_dct_scale: float = 1.0) -> list[SuiteResult]:
    return [
        _dct_suite(inject_dct_scale),
        _gradient_suite(),
        _rin_suite(),
        _mask_identity_suite(),
    ]

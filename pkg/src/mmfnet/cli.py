"""Command-line front door.

Subcommands: train, eval, ablate, export-masks, dataset-info, selftest.
Machine-readable output always goes to files under ``--out``; stdout carries
human summaries only.

Exit codes (stable): 0 success, 1 configuration error, 2 data error,
3 numerical divergence, 4 selftest failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

import yaml

from . import __version__
from .core import (
    ChannelMismatchError,
    ConfigError,
    EmptySplitError,
    InsufficientDataError,
    MmfnetError,
    NonFiniteGradientError,
    ParseError,
)
from .data import DatasetSpec, load_csv, resolve_dataset
from .harness import (
    ablation_suite,
    export_masks,
    fingerprint,
    load_config,
    run_cell,
    _prepare_windows,
    _write_record,
)
from .model import load_checkpoint, param_count, save_checkpoint
from .selftest import run_selftest
from .train import evaluate

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_DIVERGED = 3
EXIT_SELFTEST = 4

_DATA_ERRORS = (
    ParseError,
    ChannelMismatchError,
    InsufficientDataError,
    EmptySplitError,
    FileNotFoundError,
)


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _load_cfg(args):
    try:
        return load_config(args.config, args.override, args.data_dir)
    except FileNotFoundError as err:
        raise ConfigError(f"config file not found: {args.config}") from err


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_train(args) -> int:
    from .report import save_history_curve

    cfg = _load_cfg(args)
    if args.seed is not None:
        cfg = dataclasses.replace(
            cfg, train=dataclasses.replace(cfg.train, seed=args.seed)
        )
    out = Path(args.out)
    ckpt_dir = out / "checkpoints"
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    for horizon in cfg.horizons:
        windows = _prepare_windows(cfg, horizon)
        for seed in cfg.seeds():
            tic = time.perf_counter()
            record, history, params = run_cell(cfg, horizon, seed, windows)
            _write_record(out, record, history)
            ckpt_path = ckpt_dir / f"{cfg.dataset.name}_h{horizon}_seed{seed}.ckpt"
            save_checkpoint(
                params,
                ckpt_path,
                extra={"rin_std": cfg.rin_std, "fingerprint": record.fingerprint},
            )
            fig_path = (
                out / "results" / record.dataset / f"{record.fingerprint}.history.png"
            )
            save_history_curve(history, fig_path)
            wall = time.perf_counter() - tic
            _say(
                args,
                f"{cfg.dataset.name} H={horizon} seed={seed}: "
                f"val_mse={record.val_mse:.6f} test_mse={record.mse:.6f} "
                f"params={record.param_count} wall={wall:.1f}s -> {ckpt_path}",
            )
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _load_cfg(args)
    params, extra = load_checkpoint(args.checkpoint)
    rin_std = bool(extra.get("rin_std", cfg.rin_std))
    horizon = params.config.horizon
    _train_w, _val_w, test_w = _prepare_windows(cfg, horizon)
    metrics = evaluate(test_w, params, rin_std)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fp = extra.get("fingerprint", fingerprint(cfg, horizon, cfg.train.seed))
    payload = {
        "dataset": cfg.dataset.name,
        "horizon": horizon,
        "mse": metrics.mse,
        "mae": metrics.mae,
        "n_windows": metrics.n_windows,
        "n_points": metrics.n_points,
        "checkpoint": str(args.checkpoint),
        "fingerprint": fp,
        "code_version": __version__,
    }
    with open(out / f"eval_{cfg.dataset.name}_h{horizon}.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    _say(
        args,
        f"{cfg.dataset.name} H={horizon}: test mse={metrics.mse:.6f} "
        f"mae={metrics.mae:.6f} over {metrics.n_windows} windows",
    )
    return EXIT_OK


def cmd_ablate(args) -> int:
    from .report import save_ablation_figure

    cfg = _load_cfg(args)
    if args.seed is not None:
        cfg = dataclasses.replace(
            cfg, train=dataclasses.replace(cfg.train, seed=args.seed)
        )
    out = Path(args.out)
    table = ablation_suite(cfg, out, workers=args.workers)
    save_ablation_figure(table, out / "tables" / f"ablation_{table.dataset}.png")
    for h in table.horizons:
        _say(
            args,
            f"{table.dataset} H={h}: MMFT-over-SFT improvement "
            f"{table.imp_mmft_over_sft(h):+.6f}, mask improvement "
            f"{table.imp_mask(h):+.6f}",
        )
    _say(args, f"table written under {out / 'tables'}")
    return EXIT_OK


def cmd_export_masks(args) -> int:
    from .report import save_mask_heatmaps

    params, _extra = load_checkpoint(args.checkpoint)
    out = Path(args.out) / "masks"
    paths = export_masks(params, out)
    figs = save_mask_heatmaps(params, out)
    _say(args, f"wrote {len(paths)} mask grid(s) and {len(figs)} heatmap(s) to {out}")
    return EXIT_OK


def cmd_dataset_info(args) -> int:
    target = args.dataset
    if target.endswith(".csv"):
        spec = DatasetSpec(Path(target).stem, Path(target))
    else:
        spec = resolve_dataset(target, args.data_dir)
    frame = load_csv(spec)
    info = {
        "name": spec.name,
        "path": str(spec.path),
        "channels": frame.n_channels,
        "rows": frame.n_rows,
        "channel_names": list(frame.channels),
        "split_policy": spec.split_policy
        if isinstance(spec.split_policy, str)
        else list(spec.split_policy),
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"dataset_info_{spec.name}.json", "w") as fh:
            json.dump(info, fh, indent=2, sort_keys=True)
    print(f"{spec.name}: C={frame.n_channels}, T={frame.n_rows}")
    if not args.quiet:
        print(f"  channels: {', '.join(frame.channels)}")
        print(f"  split policy: {info['split_policy']}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    inject = float(os.environ.get("MMF_SELFTEST_INJECT_DCT_SCALE", "1.0"))
    results = run_selftest(inject_dct_scale=inject)
    all_ok = True
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.detail}")
        all_ok = all_ok and r.passed
    return EXIT_OK if all_ok else EXIT_SELFTEST


# ---------------------------------------------------------------------------
# Parser / entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmfnet",
        description="Multi-scale masked frequency-domain forecaster: "
        "train, evaluate, ablate, inspect.",
    )
    parser.add_argument("--version", action="version", version=f"mmfnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, help="experiment config (YAML)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--data-dir", default=None, help="dataset root (else $MMF_DATA_DIR or ./data)")
        p.add_argument("--seed", type=int, default=None, help="override train.seed")
        p.add_argument("--workers", type=int, default=1, help="max parallel cells")
        p.add_argument("--quiet", action="store_true", help="suppress human summaries")
        if config_required:
            p.add_argument(
                "override",
                nargs="*",
                help="dotted config overrides, e.g. train.learning_rate=0.01",
            )

    p_train = sub.add_parser("train", help="train and checkpoint each (horizon, seed) cell")
    common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    common(p_eval)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.set_defaults(func=cmd_eval)

    p_ablate = sub.add_parser("ablate", help="run the SFT/MFT/MMFT x mask grid")
    common(p_ablate)
    p_ablate.set_defaults(func=cmd_ablate)

    p_masks = sub.add_parser("export-masks", help="dump learned masks as CSV + heatmaps")
    common(p_masks, config_required=False)
    p_masks.add_argument("--checkpoint", required=True)
    p_masks.set_defaults(func=cmd_export_masks)

    p_info = sub.add_parser("dataset-info", help="row/channel summary of a dataset")
    p_info.add_argument("dataset", help="registered name or path to a CSV")
    p_info.add_argument("--out", default=None)
    p_info.add_argument("--data-dir", default=None)
    p_info.add_argument("--quiet", action="store_true")
    p_info.set_defaults(func=cmd_dataset_info)

    p_self = sub.add_parser("selftest", help="verify the numerical core on synthetic data")
    p_self.add_argument("--quiet", action="store_true")
    p_self.set_defaults(func=cmd_selftest)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except yaml.YAMLError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NonFiniteGradientError as err:
        print(f"training diverged: {err}", file=sys.stderr)
        return EXIT_DIVERGED
    except _DATA_ERRORS as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except MmfnetError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

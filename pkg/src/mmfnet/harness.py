"""Declarative experiment runner: config files, ablation grids, mask export.

An experiment config fully determines its results; each (horizon, seed)
cell gets a fingerprint (hash of every setting plus the code version) and
is persisted as ``results/<dataset>/<fingerprint>.jsonl`` with its training
history next to it. Rendered tables land under ``tables/`` as CSV, with
matching figures rendered by :mod:`mmfnet.report`.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from multiprocessing import get_context
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .core import ConfigError, ScaleLadder, validate_ladder
from .data import (
    DatasetSpec,
    SplitFrames,
    load_csv,
    resolve_dataset,
    split,
    split_windows,
    standardize,
)
from .model import ModelConfig, ModelParams, param_count
from .train import History, TrainConfig, evaluate, fit

DEFAULT_LADDER = (2, 24, 720)
DEFAULT_MFT_SEGMENTS = (24, 120, 360)


# ---------------------------------------------------------------------------
# Experiment configuration and config files
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetSpec
    lookback_len: int
    horizons: tuple[int, ...]
    ladder: ScaleLadder
    mask_enabled: bool = True
    rin_std: bool = False
    train: TrainConfig = TrainConfig()
    repeats: int = 1

    def __post_init__(self):
        if not self.horizons:
            raise ConfigError("horizons must be non-empty")
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        object.__setattr__(self, "horizons", tuple(int(h) for h in self.horizons))
        object.__setattr__(self, "ladder", validate_ladder(self.lookback_len, self.ladder))

    def seeds(self) -> list[int]:
        return [self.train.seed + i for i in range(self.repeats)]


_DATASET_KEYS = {"name", "path", "expected_channels", "split_policy", "sampling"}
_TRAIN_KEYS = {
    "learning_rate", "batch_size", "max_epochs", "patience", "optimizer",
    "beta1", "beta2", "eps", "seed", "shuffle",
}
_TOP_KEYS = {"dataset", "L", "horizons", "ladder", "mask_enabled", "rin_std", "train", "repeats"}


def _reject_unknown(mapping: dict, allowed: set, where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(sorted(unknown))}")


def config_from_dict(raw: dict, data_dir: Path | str | None = None) -> ExperimentConfig:
    """Build an ExperimentConfig from a plain dict (parsed YAML), strictly."""
    if not isinstance(raw, dict):
        raise ConfigError("experiment config must be a mapping")
    _reject_unknown(raw, _TOP_KEYS, "config")
    ds_raw = raw.get("dataset")
    if not isinstance(ds_raw, dict) or "name" not in ds_raw:
        raise ConfigError("config needs a dataset section with at least a name")
    _reject_unknown(ds_raw, _DATASET_KEYS, "dataset")
    name = str(ds_raw["name"])
    if "path" in ds_raw and ds_raw["path"] is not None:
        policy = ds_raw.get("split_policy", (0.7, 0.1, 0.2))
        if isinstance(policy, list):
            policy = tuple(policy)
        spec = DatasetSpec(
            name,
            Path(ds_raw["path"]),
            ds_raw.get("expected_channels"),
            str(ds_raw.get("sampling", "")),
            policy,
        )
    else:
        spec = resolve_dataset(name, data_dir)
        if "split_policy" in ds_raw or "expected_channels" in ds_raw:
            policy = ds_raw.get("split_policy", spec.split_policy)
            if isinstance(policy, list):
                policy = tuple(policy)
            spec = DatasetSpec(
                spec.name, spec.path,
                ds_raw.get("expected_channels", spec.expected_channels),
                spec.sampling, policy,
            )
    train_raw = dict(raw.get("train") or {})
    _reject_unknown(train_raw, _TRAIN_KEYS, "train")
    train_cfg = TrainConfig(**train_raw)
    return ExperimentConfig(
        dataset=spec,
        lookback_len=int(raw.get("L", 720)),
        horizons=tuple(raw.get("horizons", (96,))),
        ladder=ScaleLadder(tuple(raw.get("ladder", DEFAULT_LADDER))),
        mask_enabled=bool(raw.get("mask_enabled", True)),
        rin_std=bool(raw.get("rin_std", False)),
        train=train_cfg,
        repeats=int(raw.get("repeats", 1)),
    )


def load_config(
    path: Path | str,
    overrides: list[str] | None = None,
    data_dir: Path | str | None = None,
) -> ExperimentConfig:
    """Load a YAML experiment config and apply dotted key=value overrides."""
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if raw is None:
        raw = {}
    for item in overrides or []:
        raw = apply_override(raw, item)
    return config_from_dict(raw, data_dir)


def apply_override(raw: dict, item: str) -> dict:
    """Apply one ``dotted.key=value`` override; the key must already exist
    in the schema (unknown keys are errors, not warnings)."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, _, value = item.partition("=")
    parts = key.strip().split(".")
    schema = {"dataset": _DATASET_KEYS, "train": _TRAIN_KEYS}
    if parts[0] not in _TOP_KEYS:
        raise ConfigError(f"override references unknown key {key!r}")
    if len(parts) == 2:
        if parts[0] not in schema or parts[1] not in schema[parts[0]]:
            raise ConfigError(f"override references unknown key {key!r}")
    elif len(parts) != 1:
        raise ConfigError(f"override key {key!r} nests too deep")
    node = raw
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {key!r} conflicts with a scalar section")
    node[parts[-1]] = yaml.safe_load(value)
    return raw


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Round-trippable plain-dict form (also what gets fingerprinted)."""
    return {
        "dataset": {
            "name": cfg.dataset.name,
            "expected_channels": cfg.dataset.expected_channels,
            "split_policy": list(cfg.dataset.split_policy)
            if not isinstance(cfg.dataset.split_policy, str)
            else cfg.dataset.split_policy,
        },
        "L": cfg.lookback_len,
        "horizons": list(cfg.horizons),
        "ladder": list(cfg.ladder.segment_lengths),
        "mask_enabled": cfg.mask_enabled,
        "rin_std": cfg.rin_std,
        "train": dataclasses.asdict(cfg.train),
        "repeats": cfg.repeats,
    }


def fingerprint(cfg: ExperimentConfig, horizon: int, seed: int) -> str:
    """Hash of every setting that determines a cell's numbers."""
    payload = config_to_dict(cfg)
    payload["horizons"] = [horizon]
    payload["train"]["seed"] = seed
    payload["code_version"] = __version__
    blob = json.dumps(payload, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Result records
# ---------------------------------------------------------------------------

@dataclass
class ResultRecord:
    fingerprint: str
    dataset: str
    horizon: int
    seed: int
    mse: float
    mae: float
    n_windows: int
    n_points: int
    val_mse: float
    param_count: int
    wall_s: float
    code_version: str
    config: dict

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


def _write_record(out_dir: Path, record: ResultRecord, history: History) -> None:
    base = out_dir / "results" / record.dataset
    base.mkdir(parents=True, exist_ok=True)
    with open(base / f"{record.fingerprint}.jsonl", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(record.to_json(), sort_keys=True) + "\n")
    history.to_jsonl(base / f"{record.fingerprint}.history.jsonl")


# ---------------------------------------------------------------------------
# Experiment runner
# ---------------------------------------------------------------------------

def _prepare_windows(cfg: ExperimentConfig, horizon: int) -> tuple:
    frame = load_csv(cfg.dataset)
    splits = split(frame, cfg.dataset)
    tr, va, te, _stats = standardize(splits.train, splits.val, splits.test)
    std_splits = SplitFrames(tr, va, te, splits.boundaries)
    return split_windows(std_splits, cfg.lookback_len, horizon)


def run_cell(
    cfg: ExperimentConfig,
    horizon: int,
    seed: int,
    windows: tuple | None = None,
) -> tuple[ResultRecord, History, ModelParams]:
    """Train and evaluate one (horizon, seed) cell, deterministically."""
    tic = time.perf_counter()
    if windows is None:
        windows = _prepare_windows(cfg, horizon)
    train_w, val_w, test_w = windows
    model_cfg = ModelConfig(cfg.lookback_len, horizon, cfg.ladder, cfg.mask_enabled)
    train_cfg = dataclasses.replace(cfg.train, seed=seed)
    params, history = fit(train_w, val_w, model_cfg, train_cfg, cfg.rin_std)
    metrics = evaluate(test_w, params, cfg.rin_std)
    record = ResultRecord(
        fingerprint=fingerprint(cfg, horizon, seed),
        dataset=cfg.dataset.name,
        horizon=horizon,
        seed=seed,
        mse=metrics.mse,
        mae=metrics.mae,
        n_windows=metrics.n_windows,
        n_points=metrics.n_points,
        val_mse=history.best_val_mse(),
        param_count=param_count(params),
        wall_s=time.perf_counter() - tic,
        code_version=__version__,
        config=config_to_dict(cfg),
    )
    return record, history, params


def _cell_worker(payload: str) -> tuple:
    raw = json.loads(payload)
    raw["config"]["dataset"]["path"] = raw["dataset_path"]
    cfg = config_from_dict(raw["config"])
    record, history, _params = run_cell(cfg, raw["horizon"], raw["seed"])
    return record, history


def _cell_worker_with_params(payload: str) -> tuple:
    raw = json.loads(payload)
    raw["config"]["dataset"]["path"] = raw["dataset_path"]
    cfg = config_from_dict(raw["config"])
    return run_cell(cfg, raw["horizon"], raw["seed"])


def cell_payload(cfg: ExperimentConfig, horizon: int, seed: int) -> str:
    return json.dumps(
        {
            "config": config_to_dict(cfg),
            "dataset_path": str(cfg.dataset.path),
            "horizon": horizon,
            "seed": seed,
        }
    )


def run_experiment(
    cfg: ExperimentConfig, out_dir: Path | str, workers: int = 1
) -> list[ResultRecord]:
    """Run every (horizon, seed) cell of the config, persisting records."""
    out_dir = Path(out_dir)
    cells = [(h, s) for h in cfg.horizons for s in cfg.seeds()]
    results: list[ResultRecord] = []
    if workers > 1:
        payloads = [
            json.dumps(
                {
                    "config": config_to_dict(cfg),
                    "dataset_path": str(cfg.dataset.path),
                    "horizon": h,
                    "seed": s,
                }
            )
            for h, s in cells
        ]
        with ProcessPoolExecutor(
            max_workers=workers, mp_context=get_context("spawn")
        ) as pool:
            for record, history in pool.map(_cell_worker, payloads):
                _write_record(out_dir, record, history)
                results.append(record)
    else:
        for h in cfg.horizons:
            windows = _prepare_windows(cfg, h)
            for s in cfg.seeds():
                record, history, _params = run_cell(cfg, h, s, windows)
                _write_record(out_dir, record, history)
                results.append(record)
    write_results_table(results, out_dir)
    return results


def write_results_table(results: list[ResultRecord], out_dir: Path) -> Path:
    """Seed-averaged summary CSV, one row per (dataset, horizon)."""
    tables = Path(out_dir) / "tables"
    tables.mkdir(parents=True, exist_ok=True)
    by_cell: dict[tuple[str, int], list[ResultRecord]] = {}
    for r in results:
        by_cell.setdefault((r.dataset, r.horizon), []).append(r)
    path = tables / "results.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("dataset,horizon,mse_mean,mae_mean,n_seeds,param_count\n")
        for (ds, h), rs in sorted(by_cell.items()):
            mse = np.mean([r.mse for r in rs])
            mae = np.mean([r.mae for r in rs])
            fh.write(f"{ds},{h},{mse:.6f},{mae:.6f},{len(rs)},{rs[0].param_count}\n")
    return path


# ---------------------------------------------------------------------------
# Ablation suite
# ---------------------------------------------------------------------------

@dataclass
class AblationTable:
    dataset: str
    horizons: tuple[int, ...]
    # (variant, mask_on) -> {horizon: seed-mean MSE}
    cells: dict[tuple[str, bool], dict[int, float]]
    records: list[ResultRecord]

    def imp_mmft_over_sft(self, horizon: int) -> float:
        return self.cells[("SFT", True)][horizon] - self.cells[("MMFT", True)][horizon]

    def imp_mask(self, horizon: int, variant: str = "MMFT") -> float:
        return self.cells[(variant, False)][horizon] - self.cells[(variant, True)][horizon]


def ablation_variants(
    lookback_len: int,
    ladder: ScaleLadder,
    mft_segments: tuple[int, ...] | None = None,
) -> list[tuple[str, tuple[int, ...]]]:
    """SFT (whole window), single-scale MFT rows, and the multi-scale ladder."""
    if mft_segments is None:
        mft_segments = tuple(s for s in DEFAULT_MFT_SEGMENTS if lookback_len % s == 0)
    variants = [("SFT", (lookback_len,))]
    for s in mft_segments:
        if lookback_len % s != 0:
            raise ConfigError(f"MFT segment {s} does not divide L={lookback_len}")
        variants.append((f"MFT({s})", (s,)))
    variants.append(("MMFT", tuple(ladder.segment_lengths)))
    return variants


def ablation_suite(
    base: ExperimentConfig,
    out_dir: Path | str,
    mft_segments: tuple[int, ...] | None = None,
    workers: int = 1,
) -> AblationTable:
    """Run the variant x mask grid on byte-identical splits per horizon.

    With workers > 1, cells run in separate processes; each cell rebuilds
    its windows deterministically from the same file, so splits stay
    byte-identical across variants.
    """
    out_dir = Path(out_dir)
    variants = ablation_variants(base.lookback_len, base.ladder, mft_segments)
    cells: dict[tuple[str, bool], dict[int, float]] = {
        (name, mask): {} for name, _ in variants for mask in (True, False)
    }
    grid = []
    for horizon in base.horizons:
        for name, ladder_lengths in variants:
            for mask_on in (True, False):
                cfg = dataclasses.replace(
                    base,
                    ladder=ScaleLadder(ladder_lengths),
                    mask_enabled=mask_on,
                    horizons=(horizon,),
                )
                for seed in cfg.seeds():
                    grid.append((name, mask_on, horizon, seed, cfg))
    all_records: list[ResultRecord] = []
    outcomes: list[tuple[str, bool, int, ResultRecord]] = []
    if workers > 1:
        payloads = [
            json.dumps(
                {
                    "config": config_to_dict(cfg),
                    "dataset_path": str(cfg.dataset.path),
                    "horizon": horizon,
                    "seed": seed,
                }
            )
            for _name, _mask, horizon, seed, cfg in grid
        ]
        with ProcessPoolExecutor(
            max_workers=workers, mp_context=get_context("spawn")
        ) as pool:
            for (name, mask_on, horizon, _seed, _cfg), (record, history) in zip(
                grid, pool.map(_cell_worker, payloads)
            ):
                _write_record(out_dir, record, history)
                all_records.append(record)
                outcomes.append((name, mask_on, horizon, record))
    else:
        windows_cache: dict[int, tuple] = {}
        for name, mask_on, horizon, seed, cfg in grid:
            if horizon not in windows_cache:
                windows_cache[horizon] = _prepare_windows(base, horizon)
            record, history, _params = run_cell(cfg, horizon, seed, windows_cache[horizon])
            _write_record(out_dir, record, history)
            all_records.append(record)
            outcomes.append((name, mask_on, horizon, record))
    for (name, mask_on) in cells:
        for horizon in base.horizons:
            mses = [
                r.mse
                for n, m, h, r in outcomes
                if n == name and m == mask_on and h == horizon
            ]
            cells[(name, mask_on)][horizon] = float(np.mean(mses))
    table = AblationTable(base.dataset.name, base.horizons, cells, all_records)
    write_ablation_table(table, out_dir, variants)
    return table


def write_ablation_table(
    table: AblationTable, out_dir: Path, variants: list[tuple[str, tuple[int, ...]]]
) -> Path:
    tables = Path(out_dir) / "tables"
    tables.mkdir(parents=True, exist_ok=True)
    path = tables / f"ablation_{table.dataset}.csv"
    hs = table.horizons
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("variant,mask," + ",".join(f"h{h}" for h in hs) + "\n")
        for name, _lengths in variants:
            for mask_on in (True, False):
                row = table.cells[(name, mask_on)]
                vals = ",".join(f"{row[h]:.6f}" for h in hs)
                fh.write(f"{name},{'on' if mask_on else 'off'},{vals}\n")
        imps = ",".join(f"{table.imp_mmft_over_sft(h):+.6f}" for h in hs)
        fh.write(f"Imp(MMFT over SFT),on,{imps}\n")
        mask_imps = ",".join(f"{table.imp_mask(h):+.6f}" for h in hs)
        fh.write(f"Imp(mask),MMFT,{mask_imps}\n")
    return path


# ---------------------------------------------------------------------------
# Mask export
# ---------------------------------------------------------------------------

def export_masks(params: ModelParams, out_dir: Path | str, prefix: str = "mask") -> list[Path]:
    """One CSV grid per scale: rows are time segments, columns frequency bins.

    Values are the raw learned mask entries at full float64 precision, ready
    to heatmap.
    """
    if not params.config.mask_enabled:
        raise ConfigError("model was configured without masks; nothing to export")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, (sp, s) in enumerate(zip(params.scales, params.config.ladder.segment_lengths)):
        path = out_dir / f"{prefix}_scale{i}_seg{s}.csv"
        np.savetxt(path, sp.mask, fmt="%.17g", delimiter=",")
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# Reference targets
# ---------------------------------------------------------------------------

def load_reference_targets() -> dict:
    """Published reference MSE values and tolerances for the acceptance suite."""
    with resources.files("mmfnet").joinpath("reference_targets.json").open(
        "r", encoding="utf-8"
    ) as fh:
        return json.load(fh)


__all__ = [
    "AblationTable",
    "ExperimentConfig",
    "ResultRecord",
    "ablation_suite",
    "apply_override",
    "config_from_dict",
    "config_to_dict",
    "export_masks",
    "fingerprint",
    "load_config",
    "load_reference_targets",
    "run_cell",
    "run_experiment",
    "write_results_table",
]

"""Dataset ingestion, standardization, and canonical splits.

CSV layout: UTF-8, header row, first column an opaque date label, remaining
columns float channels. Channel order is the file's column order.

Two normalizations exist in the pipeline and must not be confused:
per-channel *dataset standardization* (train-split statistics, applied here,
which makes reported MSE comparable across published results) and per-window
RIN (applied on the fly inside the model pipeline).
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    ChannelMismatchError,
    ConfigError,
    InsufficientDataError,
    MissingValueError,
    ParseError,
    TimeSeriesFrame,
    Window,
)

RATIO_TOL = 1e-9

# Fixed split row counts (train/val/test) for the ETT benchmark protocol:
# months of 30 days at the dataset's sampling rate; the tail is unused.
ETT_HOURLY_SPLITS = (12 * 30 * 24, 4 * 30 * 24, 4 * 30 * 24)
ETT_MINUTE_SPLITS = (12 * 30 * 96, 4 * 30 * 96, 4 * 30 * 96)


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    path: Path
    expected_channels: int | None = None
    sampling: str = ""
    split_policy: str | tuple[float, float, float] = (0.7, 0.1, 0.2)

    def __post_init__(self):
        object.__setattr__(self, "path", Path(self.path))
        pol = self.split_policy
        if isinstance(pol, str):
            if pol not in ("ett_hourly", "ett_minute"):
                raise ConfigError(f"unknown split policy {pol!r}")
        else:
            pol = tuple(float(p) for p in pol)
            if len(pol) != 3 or any(p <= 0 for p in pol):
                raise ConfigError(f"ratio split needs 3 positive parts, got {pol}")
            if abs(sum(pol) - 1.0) > RATIO_TOL:
                raise ConfigError(f"ratio split must sum to 1.0, got {sum(pol)}")
            object.__setattr__(self, "split_policy", pol)


@dataclass(frozen=True)
class StandardizationStats:
    """Train-split per-channel mean/std; val/test reuse them unchanged."""

    mean: np.ndarray
    std: np.ndarray
    eps: float = 1e-8

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean) / self.std

    def invert(self, values: np.ndarray) -> np.ndarray:
        return values * self.std + self.mean


@dataclass(frozen=True)
class SplitFrames:
    """Contiguous, ordered, disjoint core splits plus their row boundaries."""

    train: TimeSeriesFrame
    val: TimeSeriesFrame
    test: TimeSeriesFrame
    boundaries: tuple[int, int, int]  # end row (exclusive) of each split


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def load_csv(spec: DatasetSpec) -> TimeSeriesFrame:
    """Parse the CSV strictly; any bad cell is reported with its location."""
    path = spec.path
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise ParseError(f"{path}: need a header row with a date column and >=1 channel")
        raw_rows = list(reader)
    if not raw_rows:
        raise ParseError(f"{path}: no data rows")
    channels = tuple(h.strip() for h in header[1:])
    n_fields = len(header)
    timestamps = []
    cells = []
    for i, row in enumerate(raw_rows):
        if len(row) != n_fields:
            raise ParseError(
                f"{path}:{i + 2}: expected {n_fields} fields, got {len(row)}"
            )
        timestamps.append(row[0])
        cells.append(row[1:])
    try:
        values = np.array(cells, dtype=np.float64)
    except ValueError:
        values = None
    if values is None or not np.all(np.isfinite(values)):
        _locate_bad_cell(path, cells, channels)
    if spec.expected_channels is not None and values.shape[1] != spec.expected_channels:
        raise ChannelMismatchError(
            f"{path}: expected {spec.expected_channels} channels, found {values.shape[1]}"
        )
    return TimeSeriesFrame(channels, values, tuple(timestamps))


def _locate_bad_cell(path, cells, channels) -> None:
    """Rescan cell by cell to name the first offending (line, column)."""
    for i, row in enumerate(cells):
        for j, cell in enumerate(row):
            where = f"{path}:{i + 2}: column {channels[j]!r}"
            if cell.strip() == "":
                raise MissingValueError(f"{where}: empty cell")
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(f"{where}: cannot parse {cell!r} as a number") from None
            if not np.isfinite(value):
                raise MissingValueError(f"{where}: non-finite value {cell!r}")
    raise ParseError(f"{path}: malformed numeric data")


# ---------------------------------------------------------------------------
# Splitting / standardization
# ---------------------------------------------------------------------------

def _split_lengths(spec: DatasetSpec, total: int) -> tuple[int, int, int]:
    pol = spec.split_policy
    if pol == "ett_hourly":
        lengths = ETT_HOURLY_SPLITS
    elif pol == "ett_minute":
        lengths = ETT_MINUTE_SPLITS
    else:
        n_train = int(total * pol[0])
        n_test = int(total * pol[2])
        lengths = (n_train, total - n_train - n_test, n_test)
    if sum(lengths) > total:
        raise InsufficientDataError(
            f"{spec.name}: {total} rows < {sum(lengths)} required by split policy {pol}"
        )
    if any(n < 1 for n in lengths):
        raise InsufficientDataError(f"{spec.name}: split policy {pol} yields an empty split")
    return lengths


def split(frame: TimeSeriesFrame, spec: DatasetSpec) -> SplitFrames:
    """Contiguous train/val/test core splits (ETT protocols drop the tail)."""
    n_train, n_val, n_test = _split_lengths(spec, frame.n_rows)
    b1, b2, b3 = n_train, n_train + n_val, n_train + n_val + n_test
    return SplitFrames(
        frame.slice_rows(0, b1),
        frame.slice_rows(b1, b2),
        frame.slice_rows(b2, b3),
        (b1, b2, b3),
    )


def standardize(
    train: TimeSeriesFrame,
    val: TimeSeriesFrame,
    test: TimeSeriesFrame,
    eps: float = 1e-8,
) -> tuple[TimeSeriesFrame, TimeSeriesFrame, TimeSeriesFrame, StandardizationStats]:
    """Per-channel z-scoring with statistics computed on the train split only."""
    mean = train.values.mean(axis=0)
    std = np.maximum(train.values.std(axis=0), eps)
    stats = StandardizationStats(mean, std, eps)
    out = tuple(
        TimeSeriesFrame(f.channels, stats.apply(f.values), f.timestamps)
        for f in (train, val, test)
    )
    return out[0], out[1], out[2], stats


def split_windows(
    splits: SplitFrames, lookback_len: int, horizon: int, stride: int = 1
) -> tuple[list[Window], list[Window], list[Window]]:
    """Sliding windows per split; val/test look-backs may reach back into the
    preceding split (left context), targets never leave their own split."""
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    full = np.vstack([splits.train.values, splits.val.values, splits.test.values])
    bounds = [0, splits.train.n_rows, splits.train.n_rows + splits.val.n_rows, full.shape[0]]
    out = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        lo = max(0, a - lookback_len)
        hi = b - lookback_len - horizon
        windows = [
            Window(full[i:i + lookback_len], full[i + lookback_len:i + lookback_len + horizon])
            for i in range(lo, hi + 1, stride)
        ]
        out.append(windows)
    if not out[0]:
        raise InsufficientDataError(
            f"train split too short for L={lookback_len}, H={horizon}"
        )
    return out[0], out[1], out[2]


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

DATASET_REGISTRY: dict[str, tuple[str, int, str, str | tuple[float, float, float]]] = {
    "ETTh1": ("ETTh1.csv", 7, "1 hour", "ett_hourly"),
    "ETTh2": ("ETTh2.csv", 7, "1 hour", "ett_hourly"),
    "ETTm1": ("ETTm1.csv", 7, "15 min", "ett_minute"),
    "ETTm2": ("ETTm2.csv", 7, "15 min", "ett_minute"),
    "Weather": ("weather.csv", 21, "10 min", (0.7, 0.1, 0.2)),
    "Electricity": ("electricity.csv", 321, "1 hour", (0.7, 0.1, 0.2)),
    "Traffic": ("traffic.csv", 862, "1 hour", (0.7, 0.1, 0.2)),
}


def default_data_dir() -> Path:
    return Path(os.environ.get("MMF_DATA_DIR", "data"))


def resolve_dataset(name: str, data_dir: Path | str | None = None) -> DatasetSpec:
    """Build the spec for a registered dataset name under the data directory."""
    if name not in DATASET_REGISTRY:
        known = ", ".join(sorted(DATASET_REGISTRY))
        raise ConfigError(f"unknown dataset {name!r} (known: {known})")
    filename, channels, sampling, policy = DATASET_REGISTRY[name]
    base = Path(data_dir) if data_dir is not None else default_data_dir()
    return DatasetSpec(name, base / filename, channels, sampling, policy)

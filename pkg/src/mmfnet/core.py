"""Core value types, shape contracts, and deterministic pseudo-randomness.

Everything downstream (transforms, model, training, data pipeline) builds on
the types defined here. All numerical data is float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class MmfnetError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MmfnetError):
    """Invalid or inconsistent configuration."""


class DivisibilityError(ConfigError):
    """A segment length does not divide the look-back length."""


class EmptyLadderError(ConfigError):
    """A scale ladder with no entries."""


class EmptyInputError(MmfnetError):
    """A transform was asked to process a zero-length vector."""


class ShapeError(MmfnetError):
    """Array shapes inconsistent with the model configuration."""


class InsufficientDataError(MmfnetError):
    """A series is too short for the requested windowing or split."""


class EmptySplitError(MmfnetError):
    """Evaluation was requested on an empty window set."""


class NonFiniteGradientError(MmfnetError):
    """A gradient contained NaN/Inf, signalling training divergence."""


class ParseError(MmfnetError):
    """CSV cell failed to parse; message carries 1-based line and column."""


class MissingValueError(ParseError):
    """CSV cell was empty or non-finite."""


class ChannelMismatchError(MmfnetError):
    """Loaded channel count differs from the declared expectation."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeSeriesFrame:
    """A multivariate series: (T, C) float64 values plus channel names.

    Timestamps are opaque labels kept only for reporting; no datetime
    arithmetic is performed on them.
    """

    channels: tuple[str, ...]
    values: np.ndarray
    timestamps: tuple[str, ...] | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ShapeError(f"frame values must be 2-D, got shape {v.shape}")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise ShapeError(f"frame must have T>=1 and C>=1, got {v.shape}")
        if len(self.channels) != v.shape[1]:
            raise ShapeError(
                f"{len(self.channels)} channel names for {v.shape[1]} columns"
            )
        if self.timestamps is not None and len(self.timestamps) != v.shape[0]:
            raise ShapeError(
                f"{len(self.timestamps)} timestamps for {v.shape[0]} rows"
            )
        v = v.copy() if v.flags.writeable else v
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "channels", tuple(self.channels))
        if self.timestamps is not None:
            object.__setattr__(self, "timestamps", tuple(self.timestamps))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    def slice_rows(self, start: int, stop: int) -> "TimeSeriesFrame":
        ts = self.timestamps[start:stop] if self.timestamps is not None else None
        return TimeSeriesFrame(self.channels, self.values[start:stop], ts)


@dataclass(frozen=True)
class Window:
    """One training/evaluation example: (L, C) lookback and (H, C) target."""

    lookback: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        if self.lookback.ndim != 2 or self.target.ndim != 2:
            raise ShapeError("lookback and target must be 2-D (steps, channels)")
        if self.lookback.shape[1] != self.target.shape[1]:
            raise ShapeError(
                f"channel mismatch: lookback C={self.lookback.shape[1]}, "
                f"target C={self.target.shape[1]}"
            )


@dataclass(frozen=True)
class ScaleLadder:
    """Segment lengths for multi-scale fragmentation, fine to coarse.

    ``counts`` (segments per scale, n_i = L / s_i) is filled in by
    :func:`validate_ladder` once the look-back length is known. A ladder of
    [L] degenerates to a single whole-window transform; a single entry
    shorter than L is the single-scale fragmented variant.
    """

    segment_lengths: tuple[int, ...]
    counts: tuple[int, ...] | None = None

    def __post_init__(self):
        lengths = tuple(int(s) for s in self.segment_lengths)
        object.__setattr__(self, "segment_lengths", lengths)
        if any(s < 1 for s in lengths):
            raise ConfigError(f"segment lengths must be positive, got {lengths}")
        if any(a >= b for a, b in zip(lengths, lengths[1:])):
            raise ConfigError(
                f"segment lengths must be strictly increasing, got {lengths}"
            )
        if self.counts is not None:
            object.__setattr__(self, "counts", tuple(int(n) for n in self.counts))

    @property
    def n_scales(self) -> int:
        return len(self.segment_lengths)


def validate_ladder(lookback_len: int, ladder: ScaleLadder) -> ScaleLadder:
    """Check every segment length divides L and annotate segment counts."""
    if lookback_len < 1:
        raise ConfigError(f"look-back length must be >= 1, got {lookback_len}")
    if ladder.n_scales == 0:
        raise EmptyLadderError("scale ladder has no entries")
    counts = []
    for s in ladder.segment_lengths:
        if lookback_len % s != 0:
            raise DivisibilityError(
                f"segment length {s} does not divide look-back length {lookback_len}"
            )
        counts.append(lookback_len // s)
    return ScaleLadder(ladder.segment_lengths, tuple(counts))


# ---------------------------------------------------------------------------
# Deterministic RNG
# ---------------------------------------------------------------------------

_SM64_GAMMA = 0x9E3779B97F4A7C15
_SM64_M1 = 0xBF58476D1CE4E5B9
_SM64_M2 = 0x94D049BB133111EB
_U64 = (1 << 64) - 1


def _sm64_mix(z: int) -> int:
    z = (z ^ (z >> 30)) * _SM64_M1 & _U64
    z = (z ^ (z >> 27)) * _SM64_M2 & _U64
    return z ^ (z >> 31)


@dataclass
class Rng:
    """SplitMix64 generator: portable, bit-reproducible across platforms.

    Update rule per draw (all arithmetic mod 2^64)::

        state  += 0x9E3779B97F4A7C15
        z       = state
        z       = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
        z       = (z ^ (z >> 27)) * 0x94D049BB133111EB
        output  = z ^ (z >> 31)

    Uniform doubles in [0, 1) take the top 53 bits: (output >> 11) * 2^-53.
    Each generator is single-owner; parallel streams come from
    :meth:`spawn`, which seeds a child with the parent's next raw draw.
    """

    seed: int
    _counter: int = field(default=0, repr=False)

    def __post_init__(self):
        self.seed = int(self.seed) & _U64

    def next_u64(self) -> int:
        self._counter += 1
        state = (self.seed + self._counter * _SM64_GAMMA) & _U64
        return _sm64_mix(state)

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        u = (self.next_u64() >> 11) * 2.0**-53
        return low + (high - low) * u

    def uniforms(self, n: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        """Vectorized equivalent of n successive :meth:`uniform` calls."""
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        z = (np.uint64(self.seed) + idx * np.uint64(_SM64_GAMMA))
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_SM64_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_SM64_M2)
        z = z ^ (z >> np.uint64(31))
        u = (z >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return low + (high - low) * u

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) via bitmask rejection (no modulo bias)."""
        if bound < 1:
            raise ValueError(f"bound must be >= 1, got {bound}")
        mask = (1 << (bound - 1).bit_length()) - 1 if bound > 1 else 0
        while True:
            r = self.next_u64() & mask
            if r < bound:
                return r

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of arange(n), swapping from the tail down."""
        perm = np.arange(n)
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def spawn(self) -> "Rng":
        """Derive an independent child stream (consumes one parent draw)."""
        return Rng(self.next_u64())


# ---------------------------------------------------------------------------
# Windowing
# ---------------------------------------------------------------------------

def make_windows(
    frame: TimeSeriesFrame, lookback_len: int, horizon: int, stride: int = 1
) -> list[Window]:
    """Slide a (lookback, target) pair over the frame.

    Window i starts at row i*stride; lookback and target are adjacent,
    contiguous views into the frame (no copies).
    """
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    if lookback_len < 1 or horizon < 1:
        raise ConfigError("lookback and horizon must be >= 1")
    total = frame.n_rows
    span = lookback_len + horizon
    if total < span:
        raise InsufficientDataError(
            f"series has {total} rows; need at least L+H = {span}"
        )
    values = frame.values
    windows = []
    for start in range(0, total - span + 1, stride):
        mid = start + lookback_len
        windows.append(Window(values[start:mid], values[mid:mid + horizon]))
    return windows

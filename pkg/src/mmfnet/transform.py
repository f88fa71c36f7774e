"""Orthonormal DCT-II / DCT-III pair and segment fragmentation.

Convention: the forward transform is the *orthonormal* DCT-II,

    X_k = a_k * sum_n x_n cos(pi/N * (n + 1/2) * k),
    a_0 = sqrt(1/N),  a_k = sqrt(2/N) for k > 0,

so the inverse is exactly the transpose (orthonormal DCT-III) and both
round-trip identity and Parseval hold to float64 precision. The common
unnormalized kernel differs only by a global 2/N factor, which here would
be absorbed by the learnable mask and linear head anyway.

Implementation is the cosine matrix applied by matmul (O(N^2) per row);
at N <= 720 this is fast and keeps the code transparent. Tests check it
against an independent double-loop evaluation of the formula.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import DivisibilityError, EmptyInputError, ShapeError


@lru_cache(maxsize=None)
def dct_basis(n: int) -> np.ndarray:
    """The n x n orthonormal DCT-II matrix G, with G @ G.T = I.

    Row k holds a_k * cos(pi/n * (m + 1/2) * k) over sample index m.
    Cached and read-only; the inverse transform is G.T.
    """
    if n < 1:
        raise EmptyInputError("DCT basis needs N >= 1")
    k = np.arange(n, dtype=np.float64)[:, None]
    m = np.arange(n, dtype=np.float64)[None, :]
    g = np.cos(np.pi / n * (m + 0.5) * k)
    g[0, :] *= np.sqrt(1.0 / n)
    g[1:, :] *= np.sqrt(2.0 / n)
    g.flags.writeable = False
    return g


# ---------------------------------------------------------------------------
# Segment containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SegmentMatrix:
    """Time-domain segments of one window: (n_segments, segment_length)."""

    data: np.ndarray
    scale_index: int = 0

    def __post_init__(self):
        if self.data.ndim != 2:
            raise ShapeError(f"segment matrix must be 2-D, got {self.data.shape}")


@dataclass(frozen=True)
class SpectrumMatrix:
    """Per-segment DCT coefficients; same shape as the source segments."""

    data: np.ndarray
    scale_index: int = 0

    def __post_init__(self):
        if self.data.ndim != 2:
            raise ShapeError(f"spectrum matrix must be 2-D, got {self.data.shape}")


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def fragment(x: np.ndarray, segment_length: int, scale_index: int = 0) -> SegmentMatrix:
    """Relayout a length-L vector into (L/s, s) row-major segments."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"fragment expects a vector, got shape {x.shape}")
    if segment_length < 1 or x.shape[0] % segment_length != 0:
        raise DivisibilityError(
            f"segment length {segment_length} does not divide vector length {x.shape[0]}"
        )
    return SegmentMatrix(x.reshape(-1, segment_length), scale_index)


def defragment(seg: SegmentMatrix) -> np.ndarray:
    """Exact inverse relayout of :func:`fragment`."""
    return seg.data.reshape(-1)


def dct_row(x: np.ndarray) -> np.ndarray:
    """Orthonormal DCT-II of one vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"dct_row expects a vector, got shape {x.shape}")
    if x.shape[0] == 0:
        raise EmptyInputError("dct_row on empty vector")
    return dct_basis(x.shape[0]) @ x


def idct_row(spectrum: np.ndarray) -> np.ndarray:
    """Orthonormal DCT-III (exact inverse of :func:`dct_row`)."""
    spectrum = np.asarray(spectrum, dtype=np.float64)
    if spectrum.ndim != 1:
        raise ShapeError(f"idct_row expects a vector, got shape {spectrum.shape}")
    if spectrum.shape[0] == 0:
        raise EmptyInputError("idct_row on empty vector")
    return dct_basis(spectrum.shape[0]).T @ spectrum


def dct_matrix(seg: SegmentMatrix) -> SpectrumMatrix:
    """Apply dct_row independently to every segment row."""
    if seg.data.shape[1] == 0:
        raise EmptyInputError("dct_matrix on zero-length segments")
    g = dct_basis(seg.data.shape[1])
    return SpectrumMatrix(seg.data @ g.T, seg.scale_index)


def idct_matrix(spec: SpectrumMatrix) -> SegmentMatrix:
    """Apply idct_row independently to every spectrum row."""
    if spec.data.shape[1] == 0:
        raise EmptyInputError("idct_matrix on zero-length spectra")
    g = dct_basis(spec.data.shape[1])
    return SegmentMatrix(spec.data @ g, spec.scale_index)

import numpy as np
import pytest

from pathlib import Path

from mmfnet.core import Rng

FIXTURE_DIR = Path(__file__).parent / "data"


@pytest.fixture
def tiny_csv() -> Path:
    """220-row, 2-channel CSV shipped with the repo."""
    return FIXTURE_DIR / "tiny.csv"


def write_synth_csv(path: Path, n_rows: int, n_channels: int, seed: int = 99) -> Path:
    """Deterministic sinusoid-plus-noise dataset for pipeline tests."""
    rng = Rng(seed)
    t = np.arange(n_rows)
    cols = []
    for c in range(n_channels):
        noise = rng.uniforms(n_rows, -0.3, 0.3)
        period = 12 + 6 * c
        cols.append(np.sin(2 * np.pi * t / period) + 0.002 * c * t + noise)
    values = np.stack(cols, axis=1)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("date," + ",".join(f"ch{c}" for c in range(n_channels)) + "\n")
        for i in range(n_rows):
            cells = ",".join(f"{values[i, c]:.6f}" for c in range(n_channels))
            fh.write(f"t{i},{cells}\n")
    return path


@pytest.fixture
def synth_csv(tmp_path) -> Path:
    return write_synth_csv(tmp_path / "synth.csv", 300, 2)

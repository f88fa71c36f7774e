import os
from pathlib import Path

import numpy as np
import pytest

from mmfnet.core import (
    ChannelMismatchError,
    ConfigError,
    InsufficientDataError,
    MissingValueError,
    ParseError,
    TimeSeriesFrame,
)
from mmfnet.data import (
    DatasetSpec,
    ETT_HOURLY_SPLITS,
    load_csv,
    resolve_dataset,
    split,
    split_windows,
    standardize,
)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def spec_for(path, **kw) -> DatasetSpec:
    return DatasetSpec(path.stem, path, **kw)


class TestLoadCsv:
    def test_toy_file(self, tmp_path):
        p = write(
            tmp_path / "toy.csv",
            "date,a,b\n2020-01-01,1.0,2.0\n2020-01-02,3.5,-4.0\n2020-01-03,0,9\n",
        )
        frame = load_csv(spec_for(p))
        assert frame.n_rows == 3 and frame.n_channels == 2
        assert frame.channels == ("a", "b")
        np.testing.assert_array_equal(frame.values[1], [3.5, -4.0])
        assert frame.timestamps[0] == "2020-01-01"

    def test_fixture_dimensions(self, tiny_csv):
        frame = load_csv(spec_for(tiny_csv))
        assert frame.n_rows == 220 and frame.n_channels == 2
        assert frame.channels == ("load", "temp")

    def test_blank_cell_named(self, tmp_path):
        p = write(tmp_path / "bad.csv", "date,a,b\nd1,1.0,2.0\nd2,,3.0\n")
        with pytest.raises(MissingValueError, match=r"bad.csv:3.*'a'"):
            load_csv(spec_for(p))

    def test_non_numeric_cell_named(self, tmp_path):
        p = write(tmp_path / "bad.csv", "date,a\nd1,1.0\nd2,oops\n")
        with pytest.raises(ParseError, match=r"bad.csv:3.*oops"):
            load_csv(spec_for(p))

    def test_nan_cell_rejected(self, tmp_path):
        p = write(tmp_path / "bad.csv", "date,a\nd1,nan\n")
        with pytest.raises(MissingValueError):
            load_csv(spec_for(p))

    def test_ragged_row_rejected(self, tmp_path):
        p = write(tmp_path / "bad.csv", "date,a,b\nd1,1.0,2.0\nd2,3.0\n")
        with pytest.raises(ParseError, match="3"):
            load_csv(spec_for(p))

    def test_channel_mismatch(self, tiny_csv):
        with pytest.raises(ChannelMismatchError):
            load_csv(spec_for(tiny_csv, expected_channels=7))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="nope.csv"):
            load_csv(spec_for(tmp_path / "nope.csv"))

    def test_loading_twice_is_bit_identical(self, tiny_csv):
        a = load_csv(spec_for(tiny_csv))
        b = load_csv(spec_for(tiny_csv))
        assert np.array_equal(a.values, b.values)


class TestSplit:
    def test_ratio_split_lengths(self):
        frame = TimeSeriesFrame(("a",), np.arange(100, dtype=float)[:, None])
        spec = DatasetSpec("x", "x.csv", split_policy=(0.7, 0.1, 0.2))
        s = split(frame, spec)
        assert (s.train.n_rows, s.val.n_rows, s.test.n_rows) == (70, 10, 20)
        assert s.boundaries == (70, 80, 100)

    def test_splits_disjoint_and_ordered(self):
        frame = TimeSeriesFrame(("a",), np.arange(50, dtype=float)[:, None])
        spec = DatasetSpec("x", "x.csv", split_policy=(0.6, 0.2, 0.2))
        s = split(frame, spec)
        assert s.train.values[-1, 0] < s.val.values[0, 0]
        assert s.val.values[-1, 0] < s.test.values[0, 0]

    def test_ett_hourly_boundaries(self):
        frame = TimeSeriesFrame(("a",), np.zeros((17420, 1)))
        spec = DatasetSpec("ETTh1", "x.csv", split_policy="ett_hourly")
        s = split(frame, spec)
        assert s.train.n_rows == 12 * 30 * 24 == 8640
        assert s.boundaries == (8640, 11520, 14400)  # tail rows unused

    def test_ett_minute_needs_enough_rows(self):
        frame = TimeSeriesFrame(("a",), np.zeros((1000, 1)))
        spec = DatasetSpec("ETTm1", "x.csv", split_policy="ett_minute")
        with pytest.raises(InsufficientDataError):
            split(frame, spec)

    def test_bad_ratio_rejected_at_spec(self):
        with pytest.raises(ConfigError):
            DatasetSpec("x", "x.csv", split_policy=(0.6, 0.1, 0.2))
        with pytest.raises(ConfigError):
            DatasetSpec("x", "x.csv", split_policy="weekly")


class TestStandardize:
    def test_two_point_column(self):
        tr = TimeSeriesFrame(("a",), np.array([[0.0], [2.0]]))
        va = TimeSeriesFrame(("a",), np.array([[1.0]]))
        te = TimeSeriesFrame(("a",), np.array([[4.0]]))
        tr2, va2, te2, stats = standardize(tr, va, te)
        np.testing.assert_allclose(stats.mean, [1.0])
        np.testing.assert_allclose(stats.std, [1.0])
        np.testing.assert_allclose(tr2.values[:, 0], [-1.0, 1.0])
        np.testing.assert_allclose(va2.values[:, 0], [0.0])
        np.testing.assert_allclose(te2.values[:, 0], [3.0])

    def test_stats_come_from_train_only(self):
        rnd = np.random.default_rng(41)
        tr = TimeSeriesFrame(("a", "b"), rnd.normal(3, 2, size=(50, 2)))
        va1 = TimeSeriesFrame(("a", "b"), rnd.normal(0, 1, size=(10, 2)))
        va2 = TimeSeriesFrame(("a", "b"), rnd.normal(9, 5, size=(10, 2)))
        te = TimeSeriesFrame(("a", "b"), rnd.normal(1, 1, size=(10, 2)))
        _, _, _, s1 = standardize(tr, va1, te)
        _, _, _, s2 = standardize(tr, va2, te)
        assert np.array_equal(s1.mean, s2.mean)
        assert np.array_equal(s1.std, s2.std)

    def test_round_trip(self):
        rnd = np.random.default_rng(42)
        tr = TimeSeriesFrame(("a", "b", "c"), rnd.uniform(-9, 9, size=(40, 3)))
        va = TimeSeriesFrame(("a", "b", "c"), rnd.uniform(-9, 9, size=(10, 3)))
        te = TimeSeriesFrame(("a", "b", "c"), rnd.uniform(-9, 9, size=(10, 3)))
        tr2, va2, te2, stats = standardize(tr, va, te)
        for orig, got in ((tr, tr2), (va, va2), (te, te2)):
            back = stats.invert(got.values)
            np.testing.assert_allclose(back, orig.values, rtol=1e-9, atol=1e-9)

    def test_standardized_train_is_centered_unit(self):
        rnd = np.random.default_rng(43)
        tr = TimeSeriesFrame(("a",), rnd.uniform(5, 15, size=(200, 1)))
        va = te = TimeSeriesFrame(("a",), rnd.uniform(5, 15, size=(10, 1)))
        tr2, _, _, _ = standardize(tr, va, te)
        assert abs(tr2.values.mean()) < 1e-9
        assert abs(tr2.values.std() - 1.0) < 1e-9

    def test_constant_channel_guarded(self):
        tr = TimeSeriesFrame(("a",), np.full((10, 1), 4.0))
        va = te = tr
        tr2, _, _, stats = standardize(tr, va, te)
        assert np.all(np.isfinite(tr2.values))
        assert stats.std[0] >= stats.eps


class TestSplitWindows:
    def make_splits(self, total=120, lb=16, policy=(0.7, 0.1, 0.2)):
        frame = TimeSeriesFrame(("a",), np.arange(total, dtype=float)[:, None])
        return split(frame, DatasetSpec("x", "x.csv", split_policy=policy))

    def test_counts_follow_protocol(self):
        s = self.make_splits()
        lb, hz = 16, 4
        train_w, val_w, test_w = split_windows(s, lb, hz)
        # train: n1 - L - H + 1; val/test: n - H + 1 (left context from
        # the preceding split provides the first L rows)
        assert len(train_w) == 84 - lb - hz + 1
        assert len(val_w) == 12 - hz + 1
        assert len(test_w) == 24 - hz + 1

    def test_context_overlap_reaches_back(self):
        s = self.make_splits()
        lb, hz = 16, 4
        _, val_w, _ = split_windows(s, lb, hz)
        # first val window's look-back starts L rows before the val boundary
        b1 = s.boundaries[0]
        np.testing.assert_array_equal(
            val_w[0].lookback[:, 0], np.arange(b1 - lb, b1, dtype=float)
        )
        np.testing.assert_array_equal(
            val_w[0].target[:, 0], np.arange(b1, b1 + hz, dtype=float)
        )

    def test_targets_never_cross_split_boundaries(self):
        s = self.make_splits()
        lb, hz = 16, 4
        train_w, val_w, test_w = split_windows(s, lb, hz)
        b1, b2, b3 = s.boundaries
        assert train_w[-1].target[-1, 0] < b1
        assert val_w[0].target[0, 0] >= b1 and val_w[-1].target[-1, 0] < b2
        assert test_w[0].target[0, 0] >= b2 and test_w[-1].target[-1, 0] < b3

    def test_train_too_short_raises(self):
        s = self.make_splits(total=40, policy=(0.5, 0.25, 0.25))
        with pytest.raises(InsufficientDataError):
            split_windows(s, 19, 4)

    def test_stride(self):
        s = self.make_splits()
        w1, _, _ = split_windows(s, 16, 4, stride=1)
        w2, _, _ = split_windows(s, 16, 4, stride=3)
        assert len(w2) == (len(w1) + 2) // 3
        np.testing.assert_array_equal(w2[1].lookback, w1[3].lookback)


DATA_DIR = Path(os.environ.get("MMF_DATA_DIR", "data"))


@pytest.mark.skipif(
    not (DATA_DIR / "ETTh1.csv").exists(),
    reason=f"ETTh1.csv not under {DATA_DIR}; run scripts/fetch_datasets.py",
)
def test_real_etth1_shape():
    frame = load_csv(resolve_dataset("ETTh1", DATA_DIR))
    assert frame.n_channels == 7
    assert frame.n_rows == 17420


class TestRegistry:
    def test_known_names(self):
        spec = resolve_dataset("ETTh1", "/tmp/datadir")
        assert spec.expected_channels == 7
        assert spec.split_policy == "ett_hourly"
        assert str(spec.path).endswith("ETTh1.csv")

    def test_unknown_name(self):
        with pytest.raises(ConfigError, match="unknown dataset"):
            resolve_dataset("NotADataset")

    def test_env_var_fallback(self, monkeypatch):
        monkeypatch.setenv("MMF_DATA_DIR", "/some/where")
        spec = resolve_dataset("Weather")
        assert str(spec.path) == "/some/where/weather.csv"
        assert spec.expected_channels == 21

    def test_ett_hourly_constant(self):
        assert ETT_HOURLY_SPLITS == (8640, 2880, 2880)

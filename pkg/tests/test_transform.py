import math

import numpy as np
import pytest

from mmfnet.core import DivisibilityError, EmptyInputError
from mmfnet.transform import (
    SegmentMatrix,
    SpectrumMatrix,
    dct_basis,
    dct_matrix,
    dct_row,
    defragment,
    fragment,
    idct_matrix,
    idct_row,
)


def naive_dct(x):
    """Independent O(N^2) double-loop oracle for the orthonormal DCT-II."""
    n = len(x)
    out = np.zeros(n)
    for k in range(n):
        acc = 0.0
        for m in range(n):
            acc += x[m] * math.cos(math.pi / n * (m + 0.5) * k)
        out[k] = acc * (math.sqrt(1.0 / n) if k == 0 else math.sqrt(2.0 / n))
    return out


class TestDctRow:
    def test_constant_signal_has_only_dc(self):
        np.testing.assert_allclose(
            dct_row(np.ones(4)), [2.0, 0.0, 0.0, 0.0], atol=1e-12
        )

    def test_hand_computed_n2(self):
        # X_0 = sqrt(1/2)*1, X_1 = 1*cos(pi/4); both are sqrt(2)/2
        expected = [0.7071067811865476, 0.7071067811865476]
        np.testing.assert_allclose(dct_row(np.array([1.0, 0.0])), expected, atol=1e-12)

    def test_matches_naive_oracle(self):
        rnd = np.random.default_rng(42)
        x = rnd.uniform(-5, 5, size=16)
        np.testing.assert_allclose(dct_row(x), naive_dct(x), atol=1e-12)

    def test_matches_naive_oracle_many_sizes(self):
        rnd = np.random.default_rng(1)
        for n in range(1, 65):
            x = rnd.uniform(-3, 3, size=n)
            np.testing.assert_allclose(dct_row(x), naive_dct(x), atol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(EmptyInputError):
            dct_row(np.array([]))


class TestIdctRow:
    def test_inverse_of_constant_case(self):
        np.testing.assert_allclose(
            idct_row(np.array([2.0, 0.0, 0.0, 0.0])), np.ones(4), atol=1e-12
        )

    def test_round_trip(self):
        rnd = np.random.default_rng(3)
        for _ in range(100):
            n = int(rnd.integers(2, 65))
            x = rnd.uniform(-10, 10, size=n)
            np.testing.assert_allclose(idct_row(dct_row(x)), x, atol=1e-10)

    def test_zero_maps_to_zero(self):
        np.testing.assert_array_equal(idct_row(np.zeros(8)), np.zeros(8))

    def test_empty_rejected(self):
        with pytest.raises(EmptyInputError):
            idct_row(np.array([]))


class TestBasisProperties:
    def test_orthonormality_up_to_64(self):
        for n in range(2, 65):
            g = dct_basis(n)
            err = np.abs(g.T @ g - np.eye(n)).max()
            assert err < 1e-10, f"N={n}: {err}"

    def test_linearity(self):
        rnd = np.random.default_rng(5)
        for _ in range(20):
            n = int(rnd.integers(2, 50))
            x, y = rnd.uniform(-4, 4, size=(2, n))
            a, b = rnd.uniform(-3, 3, size=2)
            lhs = dct_row(a * x + b * y)
            rhs = a * dct_row(x) + b * dct_row(y)
            np.testing.assert_allclose(lhs, rhs, atol=1e-10)

    def test_parseval(self):
        rnd = np.random.default_rng(6)
        for _ in range(50):
            x = rnd.uniform(-8, 8, size=int(rnd.integers(2, 128)))
            lhs = np.linalg.norm(dct_row(x))
            rhs = np.linalg.norm(x)
            assert abs(lhs - rhs) <= 1e-9 * max(rhs, 1.0)


class TestFragment:
    def test_relayout(self):
        seg = fragment(np.array([1.0, 2, 3, 4, 5, 6]), 2)
        np.testing.assert_array_equal(seg.data, [[1, 2], [3, 4], [5, 6]])

    def test_single_segment(self):
        seg = fragment(np.array([1.0, 2, 3, 4]), 4)
        np.testing.assert_array_equal(seg.data, [[1, 2, 3, 4]])

    def test_non_divisor_rejected(self):
        with pytest.raises(DivisibilityError):
            fragment(np.zeros(6), 4)

    def test_defragment_examples(self):
        np.testing.assert_array_equal(
            defragment(SegmentMatrix(np.array([[1.0, 2], [3, 4]]))), [1, 2, 3, 4]
        )
        np.testing.assert_array_equal(defragment(SegmentMatrix(np.array([[5.0]]))), [5])

    def test_round_trip_bitwise(self):
        rnd = np.random.default_rng(8)
        for s in (1, 2, 3, 4, 6, 12):
            x = rnd.uniform(-50, 50, size=12)
            assert np.array_equal(defragment(fragment(x, s)), x)

    def test_relayout_preserves_sum(self):
        rnd = np.random.default_rng(9)
        x = rnd.uniform(-2, 2, size=24)
        for s in (2, 4, 8, 24):
            assert fragment(x, s).data.sum() == x.sum()


class TestMatrixTransforms:
    def test_per_row_constant_signals(self):
        spec = dct_matrix(SegmentMatrix(np.array([[1.0, 1], [2, 2]])))
        expected = [[math.sqrt(2), 0.0], [2 * math.sqrt(2), 0.0]]
        np.testing.assert_allclose(spec.data, expected, atol=1e-12)

    def test_round_trip_30x24(self):
        rnd = np.random.default_rng(10)
        for _ in range(5):
            m = SegmentMatrix(rnd.uniform(-5, 5, size=(30, 24)))
            back = idct_matrix(dct_matrix(m))
            np.testing.assert_allclose(back.data, m.data, atol=1e-10)

    def test_single_row_matches_dct_row(self):
        rnd = np.random.default_rng(11)
        x = rnd.uniform(-3, 3, size=32)
        spec = dct_matrix(SegmentMatrix(x[None, :]))
        np.testing.assert_allclose(spec.data[0], dct_row(x), atol=1e-12)

    def test_rows_match_oracle(self):
        rnd = np.random.default_rng(12)
        m = rnd.uniform(-2, 2, size=(4, 9))
        spec = dct_matrix(SegmentMatrix(m))
        for r in range(4):
            np.testing.assert_allclose(spec.data[r], naive_dct(m[r]), atol=1e-12)

    def test_scale_index_propagates(self):
        m = SegmentMatrix(np.zeros((2, 4)), scale_index=3)
        assert dct_matrix(m).scale_index == 3
        assert idct_matrix(SpectrumMatrix(np.zeros((2, 4)), 5)).scale_index == 5

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flagdd.detection import GRAY_4QAM, lmmse_equalize, qam_demap, qam_map


class TestQam:
    def test_documented_table(self):
        for (b0, b1), sym in GRAY_4QAM.items():
            assert qam_map(np.array([b0, b1]))[0] == pytest.approx(sym)
        assert qam_map(np.array([0, 0]))[0] == pytest.approx((1 + 1j) / np.sqrt(2))

    def test_gray_adjacency(self):
        # nearest neighbours differ in exactly one bit
        for bits_a, a in GRAY_4QAM.items():
            for bits_b, b in GRAY_4QAM.items():
                if np.isclose(abs(a - b), np.sqrt(2)):
                    assert sum(x != y for x, y in zip(bits_a, bits_b)) == 1

    @given(st.lists(st.integers(0, 1), min_size=0, max_size=200).filter(lambda b: len(b) % 2 == 0))
    @settings(max_examples=50)
    def test_round_trip(self, bits):
        bits = np.array(bits, dtype=np.int8)
        np.testing.assert_array_equal(qam_demap(qam_map(bits)), bits)

    def test_unit_average_energy(self):
        bits = np.random.default_rng(0).integers(0, 2, 100_000)
        assert np.mean(np.abs(qam_map(bits)) ** 2) == pytest.approx(1.0, abs=1e-3)

    @pytest.mark.parametrize("bits", [np.array([1, 0, 1]), np.array([0, 2])])
    def test_invalid_bits(self, bits):
        with pytest.raises(ValueError):
            qam_map(bits)


class TestLmmse:
    def test_identity_noiseless(self):
        x = qam_map(np.random.default_rng(1).integers(0, 2, 32))
        np.testing.assert_allclose(lmmse_equalize(x, np.eye(16), 0.0), x, atol=1e-12)

    def test_closed_form_scalar(self):
        # y = h x with h = 2, N0 = 1: estimate = h* y / (|h|^2 + N0) = 0.8 x
        out = lmmse_equalize(np.array([2.0 + 0j]), np.array([[2.0]]), 1.0)
        assert out[0] == pytest.approx(0.8)

    def test_singular_noiseless_falls_back(self):
        h = np.diag([1.0, 0.0]).astype(complex)
        out = lmmse_equalize(np.array([3.0, 0.0]), h, 0.0)
        np.testing.assert_allclose(out, [3.0, 0.0])

    def test_shape_checks(self):
        with pytest.raises(ValueError):
            lmmse_equalize(np.ones(3), np.eye(4), 0.1)
        with pytest.raises(ValueError):
            lmmse_equalize(np.ones(4), np.eye(4), -1.0)

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zakotfs.dd_core import DDFilter, GridParams
from zakotfs.metrics import ber, binary_entropy, effective_throughput, nmse

P = GridParams(64, 24, 7.5e3)
B_PRIME, T_PRIME = 1.6 * 0.48e6, 1.6 * 3.2e-3


class TestBer:
    def test_examples(self):
        bits = np.array([0, 1, 1, 0, 1, 0, 0, 1])
        assert ber(bits, bits) == 0.0
        assert ber(bits, 1 - bits) == 1.0
        half = bits.copy()
        half[::2] ^= 1
        assert ber(bits, half) == 0.5

    def test_errors(self):
        with pytest.raises(ValueError):
            ber([0, 1], [0])
        with pytest.raises(ValueError):
            ber([], [])


class TestNmse:
    def setup_method(self):
        rng = np.random.default_rng(0)
        self.h = DDFilter(rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5)), -1, -2, P)

    def test_examples(self):
        h = self.h
        assert nmse(h, h) == 0.0
        assert nmse(h, DDFilter.zeros((0, 0), (0, 0), P)) == pytest.approx(1.0)
        assert nmse(h, h.scaled(2.0)) == pytest.approx(1.0)

    def test_estimate_on_larger_window(self):
        # taps outside the true support do not count
        big = self.h.on_window((-4, 4), (-6, 6))
        taps = big.taps.copy()
        taps[0, 0] = 5.0
        est = DDFilter(taps, -4, -6, P)
        assert nmse(self.h, est) == pytest.approx(0.0, abs=1e-15)

    def test_zero_truth(self):
        with pytest.raises(ValueError):
            nmse(DDFilter.zeros((0, 0), (0, 0), P), self.h)


class TestEntropyThroughput:
    def test_entropy_values(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert binary_entropy(0.5) == pytest.approx(1.0)
        assert binary_entropy(0.11) == pytest.approx(0.49999, abs=1e-4)
        with pytest.raises(ValueError):
            binary_entropy(1.5)

    @given(st.floats(0.0, 1.0))
    def test_entropy_symmetric_and_bounded(self, p):
        h = binary_entropy(p)
        assert 0.0 <= h <= 1.0 + 1e-12
        assert h == pytest.approx(binary_entropy(1 - p), abs=1e-12)

    def test_throughput_single_pilot(self):
        assert effective_throughput(0.0, 2736, B_PRIME, T_PRIME) == pytest.approx(0.6958, abs=1e-4)
        assert effective_throughput(0.5, 2736, B_PRIME, T_PRIME) == pytest.approx(0.0, abs=1e-15)

    @given(st.floats(0.0, 0.5), st.integers(1, 5000))
    def test_linear_in_bits(self, b, n):
        one = effective_throughput(b, 1, B_PRIME, T_PRIME)
        assert effective_throughput(b, n, B_PRIME, T_PRIME) == pytest.approx(n * one, rel=1e-12, abs=1e-15)

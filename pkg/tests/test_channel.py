import numpy as np
import pytest

from zakotfs.channel import (VEH_A, PathSpec, PhysicalChannel, add_awgn, delay_spread_bins,
                             doppler_spread_bins, effective_filter, effective_tap_reordered, sample_veh_a,
                             snr_to_sigma2, support_bounds)
from zakotfs.dd_core import DDSignal, GridParams
from zakotfs.pulse import RRCFilterSpec

P = GridParams(64, 24, 7.5e3)
SPEC = RRCFilterSpec(P)


class TestVehA:
    def test_table(self):
        assert VEH_A.delays_us[-1] == 2.51
        assert VEH_A.powers_db[-1] == -20.0
        assert len(VEH_A.delays_us) == len(VEH_A.powers_db) == 6
        assert VEH_A.relative_powers.sum() == pytest.approx(1.0)

    def test_zero_doppler(self):
        ch = sample_veh_a(0.0, np.random.default_rng(0))
        assert np.all(ch.dopplers == 0.0)

    def test_dopplers_bounded(self):
        ch = sample_veh_a(5e3, np.random.default_rng(1))
        assert np.all(np.abs(ch.dopplers) <= 5e3)
        np.testing.assert_allclose(ch.delays, VEH_A.delays)

    def test_power_normalization(self):
        rng = np.random.default_rng(2)
        n = 100_000
        p = VEH_A.relative_powers
        g = (rng.standard_normal((n, 6)) + 1j * rng.standard_normal((n, 6))) * np.sqrt(p / 2)
        assert np.mean(np.sum(np.abs(g) ** 2, axis=1)) == pytest.approx(1.0, abs=0.02)
        # the sampler itself, on fewer draws
        tot = [np.sum(np.abs(sample_veh_a(1e3, rng).gains) ** 2) for _ in range(5000)]
        assert np.mean(tot) == pytest.approx(1.0, abs=0.05)

    def test_negative_delay_rejected(self):
        with pytest.raises(ValueError):
            PathSpec(1.0, -1e-6, 0.0)
        with pytest.raises(ValueError):
            PhysicalChannel(())


class TestSpreads:
    def test_veh_a_delay_spread(self):
        assert delay_spread_bins(2.51e-6, P) == 2

    def test_doppler_spread(self):
        assert doppler_spread_bins(3e3, P) == 20
        assert doppler_spread_bins(6e3, P) == 39

    def test_zero(self):
        (k0, k1), (l0, l1) = support_bounds(0.0, 0.0, P, margin=0)
        assert (k0, k1, l0, l1) == (0, 0, 0, 0)

    def test_window_shape(self):
        kw, lw = support_bounds(2.51e-6, 3e3, P, margin=4)
        assert kw == (-4, 6)
        assert lw == (-14, 14)

    def test_exact_boundary_not_rounded_up(self):
        # 2 N nu / nu_p = 24 exactly at nu = 3.75 kHz
        assert doppler_spread_bins(3.75e3, P) == 24


class TestEffectiveFilter:
    def test_unit_path(self):
        h = effective_filter(PhysicalChannel.single(), SPEC, (-8, 8), (-8, 8))
        assert abs(h.tap(0, 0) - 1) < 1e-4
        assert h.energy() == pytest.approx(1.0, abs=1e-3)
        edge = max(abs(h.tap(8, 0)), abs(h.tap(0, 8)), abs(h.tap(-8, -8)))
        assert edge < 1e-3 * abs(h.tap(0, 0))

    def test_linear_in_gains(self):
        ch = sample_veh_a(3e3, np.random.default_rng(3))
        a = 0.7 - 0.4j
        h1 = effective_filter(ch.scaled(a), SPEC, (-4, 6), (-14, 14))
        h0 = effective_filter(ch, SPEC, (-4, 6), (-14, 14))
        np.testing.assert_allclose(h1.taps, a * h0.taps, atol=1e-10)

    def test_integer_delay_shift(self):
        h0 = effective_filter(PhysicalChannel.single(), SPEC, (-6, 6), (-6, 6))
        for k0 in (1, 3):
            h1 = effective_filter(PhysicalChannel.single(delay=k0 / P.B), SPEC, (-6 + k0, 6 + k0), (-6, 6))
            assert np.abs(h1.taps - h0.taps).max() < 1e-4

    def test_agrees_with_reordered_quadrature(self):
        # different node density and integration order: an independent evaluation
        ch = sample_veh_a(4e3, np.random.default_rng(4))
        taps = [(0, 0), (1, -3), (2, 5), (-1, 2), (4, -8)]
        h = effective_filter(ch, SPEC, (-4, 6), (-14, 14))
        ref = np.array([effective_tap_reordered(ch, SPEC, k, l, nodes_per_cell=6) for k, l in taps])
        got = np.array([h.tap(k, l) for k, l in taps])
        assert np.linalg.norm(got - ref) / np.linalg.norm(ref) < 1e-3

    def test_empty_channel_rejected(self):
        with pytest.raises(ValueError):
            effective_filter([], SPEC, (0, 0), (0, 0))


class TestNoise:
    def test_zero_variance_is_identity(self):
        y = DDSignal(np.ones((64, 24)), P)
        np.testing.assert_array_equal(add_awgn(y, 0.0, np.random.default_rng(0)).grid, y.grid)

    def test_variance_and_circularity(self):
        small = GridParams(500, 200, 1.0)
        n = add_awgn(DDSignal.zeros(small), 0.3, np.random.default_rng(5)).grid
        assert np.mean(np.abs(n) ** 2) == pytest.approx(0.3, rel=0.02)
        assert np.var(n.real) == pytest.approx(0.15, rel=0.02)
        assert np.var(n.imag) == pytest.approx(0.15, rel=0.02)

    def test_snr_convention(self):
        assert snr_to_sigma2(20.0) == pytest.approx(0.01)
        with pytest.raises(ValueError):
            add_awgn(DDSignal.zeros(P), -1.0, np.random.default_rng(0))

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zakotfs.acquisition import (EstimationError, ambiguity_estimate, auto_ambiguity,
                                 check_crystallization, conditioning_determinant, cross_ambiguity,
                                 doppler_offsets, identifiable_window, lattice_mask, ls_condition_numbers,
                                 ls_estimate, minimum_pilots, readoff_single_pilot)
from zakotfs.channel import VEH_A, sample_veh_a
from zakotfs.dd_core import DDFilter, DDSignal, GridParams, twisted_convolve
from zakotfs.framing import layout_interleaved, pilot_signal

P = GridParams(64, 24, 7.5e3)


def random_window_filter(layout, rng):
    kw, lw = identifiable_window(layout)
    shape = (kw[1] - kw[0] + 1, lw[1] - lw[0] + 1)
    return DDFilter(rng.standard_normal(shape) + 1j * rng.standard_normal(shape), kw[0], lw[0], layout.params)


class TestCrystallization:
    def test_veh_a_three_khz(self):
        r = check_crystallization(P, VEH_A.max_delay, 3e3, 1)
        assert (r.k_max, r.l_max) == (2, 20)
        assert r.crystallized and r.effective_ok_for_Q[1]

    def test_six_khz_needs_two_pilots(self):
        r = check_crystallization(P, VEH_A.max_delay, 6e3, (1, 2))
        assert r.l_max == 39
        assert not r.doppler_ok
        assert not r.effective_ok_for_Q[1] and r.effective_ok_for_Q[2]

    def test_zero_spread(self):
        r = check_crystallization(P, 0.0, 0.0, (1, 2, 4, 8, 16, 32))
        assert all(r.effective_ok_for_Q.values())
        assert not check_crystallization(P, 0.0, 0.0, 64).effective_ok_for_Q[64]

    def test_minimum_pilots(self):
        assert minimum_pilots(P, VEH_A.max_delay, 2e3) == 1
        assert minimum_pilots(P, VEH_A.max_delay, 7e3) == 2
        assert minimum_pilots(P, VEH_A.max_delay, 14e3) == 4
        assert minimum_pilots(P, VEH_A.max_delay, 16e3) is None


class TestReadoffAndLS:
    def test_readoff_three_taps(self):
        h = DDFilter.from_taps({(0, 0): 1.0, (1, 3): 0.5j, (2, -4): -0.2}, params=P)
        for kp in (0, 17):
            x = DDSignal(np.zeros((64, 24)), P) + pilot_signal(layout_interleaved(P, 1, 2, E_p=2.0))
            x = DDSignal(np.roll(x.grid, kp, axis=0), P)
            y = twisted_convolve(h, x)
            est = readoff_single_pilot(y, kp, 0, 2.0, (-1, 2), (-12, 11))
            np.testing.assert_allclose(est.on_window(h.k_window, h.l_window).taps, h.taps, atol=1e-10)

    def test_readoff_delta(self):
        L = layout_interleaved(P, 1, 2, E_p=1.0)
        est = readoff_single_pilot(pilot_signal(L), 0, 0, 1.0, (-1, 2), (-12, 11))
        assert est.tap(0, 0) == pytest.approx(1.0)
        assert est.energy() == pytest.approx(1.0)

    def test_ls_q1_equals_readoff(self):
        L = layout_interleaved(P, 1, 2, E_p=1.5)
        rng = np.random.default_rng(0)
        y = twisted_convolve(random_window_filter(L, rng), pilot_signal(L))
        a = ls_estimate(y, L)
        b = readoff_single_pilot(y, 0, 0, L.E_p, *identifiable_window(L))
        np.testing.assert_array_equal(a.taps, b.taps)

    def test_doppler_offsets(self):
        assert list(doppler_offsets(1)) == [0]
        assert list(doppler_offsets(2)) == [-1, 0]
        assert list(doppler_offsets(3)) == [-1, 0, 1]
        assert list(doppler_offsets(4)) == [-2, -1, 0, 1]

    @pytest.mark.parametrize("Q", [2, 4])
    def test_ls_inverts_forward_model(self, Q):
        L = layout_interleaved(P, Q, 2, E_p=2.0)
        h = random_window_filter(L, np.random.default_rng(Q))
        est = ls_estimate(twisted_convolve(h, pilot_signal(L)), L)
        np.testing.assert_allclose(est.taps, h.taps, atol=1e-8)

    def test_ls_custom_three_pilots(self):
        L = layout_interleaved(P, 3, 2, spacing=[0, 9, 30])
        h = random_window_filter(L, np.random.default_rng(3))
        est = ls_estimate(twisted_convolve(h, pilot_signal(L)), L)
        np.testing.assert_allclose(est.taps, h.taps, atol=1e-8)

    def test_ill_conditioned_system_raises(self):
        # two pilots one bin apart: columns nearly parallel only for tiny MN; force it with M=4096
        p = GridParams(4096, 2, 1.0)
        L = layout_interleaved(p, 2, 0, spacing=[0, 1], allow_aliasing=True, E_p=1.0)
        assert ls_condition_numbers(L).max() > 1e3
        import zakotfs.acquisition as acq
        old = acq.MAX_CONDITION
        acq.MAX_CONDITION = 10.0
        try:
            with pytest.raises(EstimationError) as exc:
                ls_estimate(DDSignal.zeros(p), L)
            assert exc.value.location is not None
        finally:
            acq.MAX_CONDITION = old


class TestAmbiguity:
    def test_zero_lag_energy(self):
        L = layout_interleaved(P, 1, 2, E_p=1.0)
        A = auto_ambiguity(L, (0, 0), (0, 0))
        assert A.at(0, 0) == pytest.approx(1.0)

    def test_zero_signal(self):
        A = cross_ambiguity(DDSignal.zeros(P), pilot_signal(layout_interleaved(P, 1, 2)), (-3, 3), (-3, 3))
        assert np.all(A.values == 0)

    @pytest.mark.parametrize("M,N,Q", [(64, 24, 1), (64, 24, 2), (64, 24, 4), (64, 6, 8), (48, 8, 3), (48, 8, 6)])
    def test_lattice_support(self, M, N, Q):
        p = GridParams(M, N, 1.0)
        L = layout_interleaved(p, Q, 2, E_p=2.5)
        A = auto_ambiguity(L, (-M, M - 1), (-Q * N, Q * N - 1))
        mask = lattice_mask(A.k_range, A.l_range, M, N, Q)
        np.testing.assert_allclose(A.values[mask], 2.5, atol=1e-10)
        assert np.abs(A.values[~mask]).max() < 1e-10

    def test_irregular_support(self):
        L = layout_interleaved(P, 2, 2, spacing=[0, 7], E_p=1.0)
        A = auto_ambiguity(L, (-64, 63), (-48, 47))
        k, l = A.k_range[:, None], A.l_range[None, :]
        expected = np.isin(np.mod(k, 64), (0, 7, 57)) & (np.mod(l, 24) == 0)
        np.testing.assert_array_equal(np.abs(A.values) > 1e-10, expected)

    def test_identity_channel_cross_equals_auto(self):
        L = layout_interleaved(P, 2, 2)
        xp = pilot_signal(L)
        np.testing.assert_allclose(cross_ambiguity(xp, xp, (-5, 5), (-30, 30)).values,
                                   auto_ambiguity(L, (-5, 5), (-30, 30)).values)

    @pytest.mark.parametrize("Q", [1, 2, 4])
    def test_estimate_matches_truth_and_ls(self, Q):
        L = layout_interleaved(P, Q, 2, E_p=4.0)
        h = random_window_filter(L, np.random.default_rng(10 + Q))
        y = twisted_convolve(h, pilot_signal(L))
        a, b = ambiguity_estimate(y, L), ls_estimate(y, L)
        np.testing.assert_allclose(a.taps, h.taps, atol=1e-8)
        np.testing.assert_allclose(a.taps, b.taps, atol=1e-8)

    def test_ls_equals_ambiguity_with_noise(self):
        L = layout_interleaved(P, 2, 2, E_p=4.0)
        rng = np.random.default_rng(5)
        y = DDSignal(rng.standard_normal((64, 24)) + 1j * rng.standard_normal((64, 24)), P)
        np.testing.assert_allclose(ambiguity_estimate(y, L).taps, ls_estimate(y, L).taps, atol=1e-10)

    def test_delta(self):
        L = layout_interleaved(P, 2, 2, E_p=1.0)
        est = ambiguity_estimate(pilot_signal(L), L)
        assert est.tap(0, 0) == pytest.approx(1.0)
        assert est.energy() == pytest.approx(1.0)

    def test_refuses_irregular(self):
        L = layout_interleaved(P, 2, 2, spacing=[0, 7])
        with pytest.raises(EstimationError, match="irregular"):
            ambiguity_estimate(DDSignal.zeros(P), L)

    def test_beyond_effective_period_fails(self):
        # 2 * nu_max = 2.4 nu_p violates the Q = 2 bound: the Doppler spread aliases
        L = layout_interleaved(P, 2, 2, E_p=1.0)
        from zakotfs.channel import effective_filter, support_bounds
        from zakotfs.pulse import RRCFilterSpec
        ch = sample_veh_a(9e3, np.random.default_rng(1))
        kw, lw = support_bounds(VEH_A.max_delay, 9e3, P)
        h = effective_filter(ch, RRCFilterSpec(P), kw, lw)
        est = ambiguity_estimate(twisted_convolve(h, pilot_signal(L)), L)
        err = np.sum(np.abs(est.on_window(kw, lw).taps - h.taps) ** 2) / h.energy()
        assert err > 0.1


class TestConditioning:
    def test_values(self):
        assert conditioning_determinant(0, 32, 64, 1.0) == pytest.approx(1.0)
        assert conditioning_determinant(0, 16, 64, 1.0) == pytest.approx(np.sqrt(2) / 2)
        assert conditioning_determinant(5, 5, 64, 1.0) == 0.0

    def test_monotone_in_circular_spacing(self):
        spacing = np.arange(0, 33)
        d = [conditioning_determinant(0, int(s), 64, 1.0) for s in spacing]
        assert np.all(np.diff(d) > 0)
        # circular: spacing s and 64 - s are equivalent
        for s in range(1, 64):
            assert conditioning_determinant(0, s, 64, 1.0) == pytest.approx(conditioning_determinant(0, 64 - s, 64, 1.0))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(4, 60))
    def test_determinant_matches_ls_matrix(self, gap):
        # |det| of the 2x2 system at l = 0 scaled by E_p/2 equals the closed form
        L = layout_interleaved(P, 2, 2, spacing=[0, gap])
        from zakotfs.acquisition import ls_system
        Phi, _ = ls_system(L, 0)
        assert abs(np.linalg.det(Phi)) / 2 == pytest.approx(conditioning_determinant(0, gap, 64, 1.0))

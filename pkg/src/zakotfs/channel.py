"""Doubly-spread physical channel, effective DD filter and DD-domain noise."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dd_core import DDFilter, DDSignal, GridParams
from .pulse import RRCFilterSpec, quadrature_nodes, rrc


@dataclass(frozen=True)
class PathSpec:
    gain: complex
    delay: float
    doppler: float

    def __post_init__(self):
        if self.delay < 0:
            raise ValueError(f"path delay must be >= 0, got {self.delay}")


@dataclass(frozen=True)
class PhysicalChannel:
    paths: tuple

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if not self.paths:
            raise ValueError("a physical channel needs at least one path")

    @property
    def gains(self) -> np.ndarray:
        return np.array([p.gain for p in self.paths], complex)

    @property
    def delays(self) -> np.ndarray:
        return np.array([p.delay for p in self.paths], float)

    @property
    def dopplers(self) -> np.ndarray:
        return np.array([p.doppler for p in self.paths], float)

    def scaled(self, alpha) -> "PhysicalChannel":
        return PhysicalChannel(tuple(PathSpec(alpha * p.gain, p.delay, p.doppler) for p in self.paths))

    @classmethod
    def single(cls, gain=1.0, delay=0.0, doppler=0.0) -> "PhysicalChannel":
        return cls((PathSpec(complex(gain), delay, doppler),))


@dataclass(frozen=True)
class VehAProfile:
    delays_us: tuple = (0.0, 0.31, 0.71, 1.09, 1.73, 2.51)
    powers_db: tuple = (0.0, -1.0, -9.0, -10.0, -15.0, -20.0)

    @property
    def delays(self) -> np.ndarray:
        return np.array(self.delays_us) * 1e-6

    @property
    def relative_powers(self) -> np.ndarray:
        """Linear path powers normalized to sum to one."""
        p = 10.0 ** (np.array(self.powers_db) / 10.0)
        return p / p.sum()

    @property
    def max_delay(self) -> float:
        return float(max(self.delays_us)) * 1e-6


VEH_A = VehAProfile()


def sample_veh_a(nu_max: float, rng: np.random.Generator, profile: VehAProfile = VEH_A) -> PhysicalChannel:
    """Draw one Veh-A realization with Jakes-style Doppler ``nu_max cos(theta)``."""
    if nu_max < 0:
        raise ValueError("nu_max must be >= 0")
    power = profile.relative_powers
    n = len(power)
    g = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.sqrt(power / 2)
    theta = rng.uniform(-np.pi, np.pi, n)
    nu = nu_max * np.cos(theta)
    return PhysicalChannel(tuple(PathSpec(complex(g[i]), float(d), float(nu[i]))
                                 for i, d in enumerate(profile.delays)))


def _ceil(x: float) -> int:
    # guards against 24.000000000000004-style roundoff in the bin arithmetic
    return int(math.ceil(x - 1e-9))


def delay_spread_bins(tau_max: float, params: GridParams) -> int:
    return _ceil(params.M * tau_max / params.tau_p)


def doppler_spread_bins(nu_max: float, params: GridParams) -> int:
    return _ceil(2 * params.N * nu_max / params.nu_p)


def support_bounds(tau_max: float, nu_max: float, params: GridParams, margin: int = 4):
    """Tap window ``((k_lo, k_hi), (l_lo, l_hi))`` covering the expected support."""
    if tau_max < 0 or nu_max < 0:
        raise ValueError("tau_max and nu_max must be >= 0")
    k_max = delay_spread_bins(tau_max, params)
    half = _ceil(doppler_spread_bins(nu_max, params) / 2)
    return (-margin, k_max + margin), (-half - margin, half + margin)


def effective_filter(chan, spec: RRCFilterSpec, k_window, l_window,
                     nodes_per_cell: int = 8) -> DDFilter:
    """Sample ``w_rx *σ h_phy *σ w_tx`` on the information lattice.

    ``chan`` is a :class:`PhysicalChannel` or any sequence of :class:`PathSpec`.

    Each path collapses the middle convolution. The remaining 2D integral over
    the receive-filter support has a separable integrand, so the tensor-product
    Simpson rule factors into a delay sum and a Doppler sum:

    ``h[k,l] = g exp(j2pi nu_i (k/B - tau_i)) F(k) G(k, l)`` with
    ``F(k) = ∫ a(u) a(k - B tau_i - u) exp(-j2pi nu_i u / B) du`` and
    ``G(k, l) = ∫ b(v) b(l - T nu_i - v) exp(j2pi v k / MN) dv``.
    """
    paths = chan.paths if isinstance(chan, PhysicalChannel) else tuple(chan)
    if not paths:
        raise ValueError("empty path list")
    p = spec.params
    ks = np.arange(k_window[0], k_window[1] + 1)
    ls = np.arange(l_window[0], l_window[1] + 1)
    u, wu = quadrature_nodes(spec.cutoff, nodes_per_cell)
    a_u = rrc(u, spec.beta_tau) * wu
    b_v = rrc(u, spec.beta_nu) * wu
    v = u
    twist_v = np.exp(2j * np.pi * np.outer(ks, v) / p.MN)          # (K, V)
    taps = np.zeros((ks.size, ls.size), complex)
    for path in paths:
        d = p.B * path.delay
        f = p.T * path.doppler
        # delay factor: (K, U)
        a_shift = rrc(ks[:, None] - d - u[None, :], spec.beta_tau)
        F = (a_shift * np.exp(-2j * np.pi * path.doppler / p.B * u)[None, :]) @ a_u
        # Doppler factor: (K, L)
        b_shift = rrc(ls[:, None] - f - v[None, :], spec.beta_nu)   # (L, V)
        G = (twist_v * b_v[None, :]) @ b_shift.T
        phase = np.exp(2j * np.pi * path.doppler * (ks / p.B - path.delay))
        taps += path.gain * (phase * F)[:, None] * G
    return DDFilter(taps, k_window[0], l_window[0], p)


def effective_tap_reordered(chan: PhysicalChannel, spec: RRCFilterSpec, k: int, l: int,
                            nodes_per_cell: int = 8) -> complex:
    """Independent oracle: ``(w_rx *σ h_phy) *σ w_tx`` at one lattice point.

    Brute-force 2D tensor Simpson over the full mesh, with the integrand
    evaluated without any factorization.
    """
    from .pulse import w_rx, w_tx

    p = spec.params
    tau, nu = k / p.B, l / p.T
    s, ws = quadrature_nodes(spec.cutoff, nodes_per_cell)
    W = np.outer(ws, ws) / (p.B * p.T)
    total = 0j
    for path in chan.paths:
        # c(tau', nu') = g w_rx(tau' - tau_i, nu' - nu_i) exp(j2pi (nu' - nu_i) tau_i)
        tp = path.delay + s[:, None] / p.B
        vp = path.doppler + s[None, :] / p.T
        c = path.gain * w_rx(spec, tp - path.delay, vp - path.doppler) \
            * np.exp(2j * np.pi * (vp - path.doppler) * path.delay)
        integrand = c * w_tx(spec, tau - tp, nu - vp) * np.exp(2j * np.pi * vp * (tau - tp))
        total += np.sum(integrand * W)
    return complex(total)


def snr_to_sigma2(snr_db: float, symbol_energy: float = 1.0) -> float:
    """Per-sample DD noise variance for a data SNR in dB."""
    return symbol_energy * 10.0 ** (-snr_db / 10.0)


def add_awgn(y: DDSignal, sigma2: float, rng: np.random.Generator) -> DDSignal:
    """Add i.i.d. circular complex Gaussian noise of variance ``sigma2`` per sample."""
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    shape = y.grid.shape
    n = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return DDSignal(y.grid + np.sqrt(sigma2 / 2) * n, y.params)


def veh_a_windows(nu_max: float, params: GridParams, margin: int = 4,
                  profile: VehAProfile = VEH_A):
    return support_bounds(profile.max_delay, nu_max, params, margin)


"""Time-domain realization, forward Zak transform and the TD reference receiver."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import PhysicalChannel
from .dd_core import DDSignal, GridParams, extend_values
from .pulse import RRCFilterSpec, rrc

INTERP_HALF_WIDTH = 16
KAISER_BETA = 12.0


@dataclass(frozen=True)
class TDSignal:
    """Uniformly sampled complex baseband waveform.

    Parameters
    ----------
    samples : ndarray
        Complex samples ``s(t0 + n / rate)``.
    t0 : float
        Time of the first sample in seconds.
    rate : float
        Sample rate in Hz.
    period : float, optional
        Frame duration used as the averaging interval for PAPR. ``None``
        averages over the samples themselves.
    """

    samples: np.ndarray
    t0: float
    rate: float
    period: Optional[float] = None

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex, copy=True).reshape(-1)
        if not np.all(np.isfinite(s)):
            raise ValueError("TD samples must be finite")
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.rate

    @property
    def duration(self) -> float:
        return self.samples.size / self.rate

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) / self.rate)

    def __call__(self, t) -> np.ndarray:
        """Band-limited interpolation at arbitrary times (zero outside the record)."""
        return interpolate(self.samples, (np.asarray(t, float) - self.t0) * self.rate)


def interpolate(samples: np.ndarray, pos) -> np.ndarray:
    """Kaiser-windowed sinc interpolation at fractional sample positions.

    Positions within 1e-9 of an integer return that sample exactly.
    """
    pos = np.asarray(pos, float)
    flat = pos.reshape(-1)
    nearest = np.rint(flat)
    on_grid = np.abs(flat - nearest) < 1e-9
    i0 = np.floor(flat).astype(np.int64)
    frac = flat - i0
    out = np.zeros(flat.size, complex)
    n = samples.size
    H = INTERP_HALF_WIDTH
    norm = np.i0(KAISER_BETA)
    for j in range(-H + 1, H + 1):
        idx = i0 + j
        d = frac - j
        w = np.sinc(d) * np.i0(KAISER_BETA * np.sqrt(np.clip(1 - (d / H) ** 2, 0, None))) / norm
        ok = (idx >= 0) & (idx < n) & ~on_grid
        out[ok] += w[ok] * samples[idx[ok]]
    exact = on_grid & (nearest >= 0) & (nearest < n)
    out[exact] = samples[nearest[exact].astype(np.int64)]
    return out.reshape(pos.shape)


def rrc_spectrum(f, beta: float) -> np.ndarray:
    """Fourier transform of :func:`rrc` (square root of the raised-cosine spectrum)."""
    f = np.abs(np.asarray(f, float))
    lo, hi = (1 - beta) / 2, (1 + beta) / 2
    out = np.where(f <= lo, 1.0, 0.0)
    if beta > 0:
        band = (f > lo) & (f <= hi)
        out = np.where(band, np.cos(np.pi / (2 * beta) * (f - lo)), out)
    return out


def sample_rate(spec: RRCFilterSpec, oversample: int) -> float:
    return oversample * spec.B_eff


def td_realize(x: DDSignal, spec: RRCFilterSpec, oversample: int = 16) -> TDSignal:
    """Pulse-shaped inverse Zak transform of a DD subframe.

    Summing the Doppler replicas of the comb turns the ``nu``-integral into the
    transform of the Doppler pulse, which leaves

    ``s(t) = sqrt(tau_p) sqrt(BT) / T * sum_k a(Bt - k) S(k / MN) X[k]``

    with ``X[k] = sum_l x[k, l]`` over one Doppler period (extended in delay)
    and ``S`` the spectrum of the Doppler pulse.
    """
    if oversample < 2:
        raise ValueError("oversample must be >= 2")
    p = spec.params
    if x.params != p:
        raise ValueError("grid mismatch between signal and filter spec")
    MN = p.MN
    k_span = int(np.ceil((1 + spec.beta_nu) / 2 * MN))
    ks = np.arange(-k_span, k_span + 1)
    S = rrc_spectrum(ks / MN, spec.beta_nu)
    X = extend_values(x.grid, ks[:, None], np.arange(p.N)[None, :]).sum(axis=1)
    coef = np.sqrt(p.tau_p * p.B * p.T) / p.T * S * X

    rate = sample_rate(spec, oversample)
    cut = int(np.ceil(spec.cutoff))
    n_lo = int(np.floor((ks[0] - cut) / p.B * rate))
    n_hi = int(np.ceil((ks[-1] + cut) / p.B * rate))
    t = np.arange(n_lo, n_hi + 1) / rate
    bt = p.B * t
    base = np.rint(bt).astype(np.int64)
    s = np.zeros(t.size, complex)
    for j in range(-cut, cut + 1):
        k = base + j
        ok = (k >= ks[0]) & (k <= ks[-1])
        s[ok] += rrc(bt[ok] - k[ok], spec.beta_tau) * coef[k[ok] - ks[0]]
    return TDSignal(s, n_lo / rate, rate, period=p.T)


def apply_physical_channel_td(s: TDSignal, chan: PhysicalChannel) -> TDSignal:
    """``r(t) = sum_i h_i s(t - tau_i) exp(j2pi nu_i (t - tau_i))``.

    The output record is extended to hold the largest path delay.
    """
    extra = int(np.ceil(max(0.0, chan.delays.max()) * s.rate - 1e-9))
    n = s.samples.size + extra
    t = s.t0 + np.arange(n) / s.rate
    r = np.zeros(n, complex)
    for path in chan.paths:
        shifted = interpolate(s.samples, np.arange(n) - path.delay * s.rate)
        r += path.gain * shifted * np.exp(2j * np.pi * path.doppler * (t - path.delay))
    return TDSignal(r, s.t0, s.rate, s.period)


def papr_db(s: TDSignal) -> float:
    """Peak-to-average power ratio in dB.

    The average is the signal energy over ``s.period`` when set, otherwise the
    mean of the sample powers.
    """
    power = np.abs(s.samples) ** 2
    if power.size == 0 or power.max() == 0:
        raise ValueError("PAPR is undefined for a zero signal")
    mean = s.energy() / s.period if s.period else power.mean()
    return float(10 * np.log10(power.max() / mean))


@dataclass(frozen=True)
class ZakGrid:
    """Samples ``values[i, d] = Z(taus[i], nus[d])``; the Doppler axis covers one period."""

    values: np.ndarray
    taus: np.ndarray
    nus: np.ndarray
    params: GridParams

    @property
    def delay_step(self) -> float:
        return self.taus[1] - self.taus[0] if self.taus.size > 1 else 0.0

    @property
    def doppler_step(self) -> float:
        return self.nus[1] - self.nus[0] if self.nus.size > 1 else 0.0

    def on_lattice(self) -> DDSignal:
        """``Z(k / B, l / T)`` on the fundamental region, when those points are on the grid."""
        p = self.params
        S = int(round(1.0 / (self.delay_step * p.B)))
        D = int(round(1.0 / (self.doppler_step * p.T)))
        i0 = int(round(self.taus[0] * p.B * S))
        rows = np.arange(p.M) * S - i0
        if rows.min() < 0 or rows.max() >= self.taus.size:
            raise ValueError("delay grid does not cover [0, tau_p)")
        return DDSignal(self.values[rows][:, np.arange(p.N) * D], p)


def zak_transform(s: TDSignal, params: GridParams, delay_oversample: int = 16,
                  doppler_oversample: int = 8, tau_range=None) -> ZakGrid:
    """``Z(tau, nu) = sqrt(tau_p) sum_n s(tau + n tau_p) exp(-j2pi n nu tau_p)``.

    Delays are ``i / (delay_oversample B)`` over ``tau_range`` (default one
    delay period); Dopplers are ``d / (doppler_oversample T)`` over one Doppler
    period.
    """
    tau_p = params.tau_p
    if s.duration < tau_p:
        raise ValueError(f"signal spans {s.duration:.3g} s, less than one delay period {tau_p:.3g} s")
    S, D = delay_oversample, doppler_oversample
    step = 1.0 / (S * params.B)
    lo, hi = tau_range if tau_range is not None else (0.0, tau_p)
    i_lo, i_hi = int(np.ceil(lo / step - 1e-9)), int(np.floor(hi / step + 1e-9))
    if hi == tau_p and tau_range is None:
        i_hi -= 1
    taus = np.arange(i_lo, i_hi + 1) * step
    nus = np.arange(params.N * D) / (params.T * D)

    t_end = s.t0 + s.duration
    margin = (INTERP_HALF_WIDTH + 1) / s.rate
    n_lo = int(np.floor((s.t0 - margin - taus[-1]) / tau_p))
    n_hi = int(np.ceil((t_end + margin - taus[0]) / tau_p))
    ns = np.arange(n_lo, n_hi + 1)
    vals = s(taus[:, None] + ns[None, :] * tau_p)                # (tau, n)
    kernel = np.exp(-2j * np.pi * np.outer(ns, nus) * tau_p)      # (n, nu)
    return ZakGrid(np.sqrt(tau_p) * vals @ kernel, taus, nus, params)


def receive_filter_td(r: TDSignal, spec: RRCFilterSpec, delay_oversample: int = 16,
                      doppler_oversample: int = 8) -> DDSignal:
    """Reference receiver: Zak transform, matched filtering on the fine grid, lattice sampling.

    ``y[k, l] = sqrt(BT) dtau dnu sum_{tau', nu'} a(B tau') b(T nu') exp(j2pi nu' k / B)
    Z(k/B - tau', l/T - nu')`` with the sums over the truncated filter support.
    """
    p = spec.params
    S, D = delay_oversample, doppler_oversample
    cut = int(np.ceil(spec.cutoff))
    Z = zak_transform(r, p, S, D, tau_range=(-cut / p.B, (p.M + cut) / p.B))
    dtau, dnu = 1.0 / (S * p.B), 1.0 / (D * p.T)
    i0 = int(round(Z.taus[0] / dtau))
    j = np.arange(-cut * S, cut * S + 1)
    a = rrc(j / S, spec.beta_tau)
    d = np.arange(-cut * D, cut * D + 1)
    b = rrc(d / D, spec.beta_nu)
    ND = p.N * D
    y = np.empty((p.M, p.N), complex)
    for k in range(p.M):
        # delay contraction: u(nu) = sum_j a_j Z(k/B - j dtau, nu)
        rows = k * S - j - i0
        u = a @ Z.values[rows]
        # Doppler: circular correlation with the twisted Doppler pulse
        c = np.zeros(ND, complex)
        np.add.at(c, np.mod(d, ND), b * np.exp(2j * np.pi * d * k / (D * p.MN)))
        conv = np.fft.ifft(np.fft.fft(c) * np.fft.fft(u))
        y[k] = conv[np.arange(p.N) * D]
    return DDSignal(np.sqrt(p.B * p.T) * dtau * dnu * y, p)


def td_pipeline(x: DDSignal, chan: PhysicalChannel, spec: RRCFilterSpec, oversample: int = 16,
                delay_oversample: int = 16, doppler_oversample: int = 8) -> DDSignal:
    """Transmit, propagate and receive entirely through the time domain."""
    s = td_realize(x, spec, oversample)
    r = apply_physical_channel_td(s, chan)
    return receive_filter_td(r, spec, delay_oversample, doppler_oversample)


def write_trace_csv(s: TDSignal, path) -> None:
    """Write ``time_s,energy`` rows with the per-sample energy ``|s|^2``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "energy"])
        for t, e in zip(s.times, np.abs(s.samples) ** 2):
            w.writerow([f"{t:.12e}", f"{e:.12e}"])

"""Learning the effective DD filter from interleaved-pilot responses."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np
import scipy.linalg

from .channel import delay_spread_bins, doppler_spread_bins
from .dd_core import DDFilter, DDSignal, GridParams, extend_values
from .framing import FrameLayout, pilot_signal

MAX_CONDITION = 1e12


class EstimationError(RuntimeError):
    """Raised when the pilot equations cannot be solved reliably."""

    def __init__(self, message: str, location=None, condition: Optional[float] = None):
        super().__init__(message)
        self.location = location
        self.condition = condition


@dataclass(frozen=True)
class CrystallizationReport:
    k_max: int
    l_max: int
    delay_ok: bool
    doppler_ok: bool
    effective_ok_for_Q: dict

    @property
    def crystallized(self) -> bool:
        return self.delay_ok and self.doppler_ok


def effective_condition(k_max: int, l_max: int, params: GridParams, Q: int) -> bool:
    """Alias-free acquisition with ``Q`` interleaved pilots."""
    return k_max + 2 <= params.M / Q and l_max < Q * params.N


def check_crystallization(params: GridParams, tau_max: float, nu_max: float,
                          Q: Union[int, Iterable[int]] = 1) -> CrystallizationReport:
    if tau_max < 0 or nu_max < 0:
        raise ValueError("tau_max and nu_max must be >= 0")
    qs = [Q] if np.isscalar(Q) else list(Q)
    if any(q < 1 for q in qs):
        raise ValueError("Q must be >= 1")
    k_max = delay_spread_bins(tau_max, params)
    l_max = doppler_spread_bins(nu_max, params)
    return CrystallizationReport(
        k_max, l_max, k_max < params.M, l_max < params.N,
        {int(q): effective_condition(k_max, l_max, params, int(q)) for q in qs},
    )


def minimum_pilots(params: GridParams, tau_max: float, nu_max: float,
                   candidates=(1, 2, 4)) -> Optional[int]:
    """Smallest candidate ``Q`` meeting the effective crystallization condition."""
    rep = check_crystallization(params, tau_max, nu_max, candidates)
    ok = [q for q in sorted(rep.effective_ok_for_Q) if rep.effective_ok_for_Q[q]]
    return ok[0] if ok else None


def readoff_single_pilot(y: DDSignal, k_p: int, l_p: int, E_p: float,
                         k_window, l_window) -> DDFilter:
    """``h[k, l] = y[k + k_p, l + l_p] exp(-j2pi k_p l / MN) / sqrt(E_p)`` over the window."""
    p = y.params
    ks = np.arange(k_window[0], k_window[1] + 1)[:, None]
    ls = np.arange(l_window[0], l_window[1] + 1)[None, :]
    vals = extend_values(y.grid, ks + k_p, ls + l_p)
    vals = vals * np.exp(-2j * np.pi * np.mod(k_p * ls, p.MN) / p.MN) / np.sqrt(E_p)
    return DDFilter(vals, k_window[0], l_window[0], p)


def doppler_offsets(Q: int) -> np.ndarray:
    """Multiples of ``N`` that alias onto one Doppler residue: even ``Q`` gives
    ``-Q/2 .. Q/2 - 1``, odd ``Q`` gives ``-(Q-1)/2 .. (Q-1)/2``."""
    if Q % 2 == 0:
        return np.arange(-Q // 2, Q // 2)
    return np.arange(-(Q - 1) // 2, (Q - 1) // 2 + 1)


def identifiable_window(layout: FrameLayout):
    """``((k_lo, k_hi), (l_lo, l_hi))`` covered by the LS/ambiguity estimators.

    Even ``Q`` pairs the offsets with base residues ``0 .. N-1``; odd ``Q``
    centres the base residues so ``Q = 1`` matches the single-pilot read-off.
    """
    N, Q = layout.params.N, layout.Q
    base_lo = 0 if Q % 2 == 0 else -(N // 2)
    l_lo = base_lo + int(doppler_offsets(Q)[0]) * N
    return (-1, layout.k_max), (l_lo, l_lo + Q * N - 1)


def ls_system(layout: FrameLayout, l: int, doppler_window=None) -> tuple:
    """Matrix of the ``Q x Q`` system at Doppler residue ``l``.

    Returns ``(Phi, cols)``: ``Phi[i, q] = exp(j2pi l_q k_p[i] / MN)`` for the
    unknown Doppler taps ``l_q = cols[q]`` congruent to ``l`` mod ``N``.
    """
    p = layout.params
    l_lo, l_hi = doppler_window or identifiable_window(layout)[1]
    first = l_lo + (l - l_lo) % p.N
    cols = np.arange(first, l_hi + 1, p.N)
    kp = np.asarray(layout.pilot_delays)
    Phi = np.exp(2j * np.pi * np.mod(np.outer(kp, cols), p.MN) / p.MN)
    return Phi, cols


def ls_condition_numbers(layout: FrameLayout, doppler_window=None) -> np.ndarray:
    p = layout.params
    return np.array([np.linalg.cond(ls_system(layout, l, doppler_window)[0]) for l in range(p.N)])


def ls_estimate(y: DDSignal, layout: FrameLayout, k_window=None, doppler_window=None) -> DDFilter:
    """Least-squares tap estimate from ``Q`` interleaved pilots.

    For each delay ``k`` and Doppler residue ``l`` the pilot responses
    ``y[k + k_p[i], l]`` form ``Q`` equations in the ``Q`` taps
    ``h[k, l + qN]``. The matrix depends on ``l`` only and is factored once per residue.
    """
    p = layout.params
    k_default, l_default = identifiable_window(layout)
    k_window = k_window or k_default
    doppler_window = doppler_window or l_default
    l_lo, l_hi = doppler_window
    if l_hi - l_lo + 1 != layout.Q * p.N:
        raise ValueError(f"Doppler window must span Q*N = {layout.Q * p.N} bins")
    ks = np.arange(k_window[0], k_window[1] + 1)
    kp = np.asarray(layout.pilot_delays)
    amp = np.sqrt(layout.E_p / layout.Q)
    taps = np.zeros((ks.size, l_hi - l_lo + 1), complex)
    for l in range(p.N):
        Phi, cols = ls_system(layout, l, doppler_window)
        cond = np.linalg.cond(Phi)
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise EstimationError(f"pilot system singular at Doppler residue {l} (cond={cond:.3g})",
                                  location=(int(ks[0]), l), condition=cond)
        # rows: pilots, columns: delays
        rhs = extend_values(y.grid, ks[None, :] + kp[:, None], np.full((kp.size, ks.size), l))
        lu = scipy.linalg.lu_factor(Phi)
        sol = scipy.linalg.lu_solve(lu, rhs) / amp
        taps[:, cols - l_lo] = sol.T
    return DDFilter(taps, k_window[0], l_lo, p)


@dataclass(frozen=True)
class AmbiguitySurface:
    """``values[k - k_lo, l - l_lo]`` over a rectangular window."""

    values: np.ndarray
    k_lo: int
    l_lo: int
    params: GridParams

    @property
    def k_range(self) -> np.ndarray:
        return np.arange(self.k_lo, self.k_lo + self.values.shape[0])

    @property
    def l_range(self) -> np.ndarray:
        return np.arange(self.l_lo, self.l_lo + self.values.shape[1])

    def at(self, k: int, l: int) -> complex:
        return complex(self.values[k - self.k_lo, l - self.l_lo])


def cross_ambiguity(y: DDSignal, x: DDSignal, k_window, l_window) -> AmbiguitySurface:
    """Direct-sum cross-ambiguity over the fundamental region.

    ``A[k, l] = sum_{k', l' in D} y[k', l'] conj(x[k' - k, l' - l]) exp(-j2pi l (k' - k) / MN)``
    """
    if y.params != x.params:
        raise ValueError("grid mismatch between y and x")
    p = y.params
    M, N, MN = p.M, p.N, p.MN
    ks = np.arange(k_window[0], k_window[1] + 1)
    ls = np.arange(l_window[0], l_window[1] + 1)
    kp, lp = np.meshgrid(np.arange(M), np.arange(N), indexing="ij")
    yv = y.grid.ravel()
    # zero samples contribute nothing; sparse pilot frames become cheap
    nz = np.flatnonzero(yv)
    kp, lp, yv = kp.ravel()[nz], lp.ravel()[nz], yv[nz]
    out = np.empty((ks.size, ls.size), complex)
    for j, l in enumerate(ls):
        dk = kp[None, :] - ks[:, None]                          # (K, MN)
        xs = extend_values(x.grid, dk, (lp - l)[None, :])
        twist = np.exp(-2j * np.pi * np.mod(l * dk, MN) / MN)
        out[:, j] = (np.conj(xs) * twist) @ yv
    return AmbiguitySurface(out, int(ks[0]), int(ls[0]), p)


def auto_ambiguity(layout: FrameLayout, k_window, l_window) -> AmbiguitySurface:
    xp = pilot_signal(layout)
    return cross_ambiguity(xp, xp, k_window, l_window)


def lattice_mask(k_range, l_range, M: int, N: int, Q: int) -> np.ndarray:
    """Indicator of ``{(n M/Q, m Q N)}`` on the given index ranges."""
    k = np.asarray(k_range)[:, None]
    l = np.asarray(l_range)[None, :]
    return (np.mod(k, M // Q) == 0) & (np.mod(l, Q * N) == 0)


def ambiguity_estimate(y: DDSignal, layout: FrameLayout, k_window=None, doppler_window=None) -> DDFilter:
    """Read taps off the cross-ambiguity with the transmitted pilot, divided by ``E_p``.

    Only meaningful when the pilot auto-ambiguity is supported on a lattice,
    i.e. for regular spacing.
    """
    if not layout.regular:
        gaps = np.diff(sorted(layout.pilot_delays) + [sorted(layout.pilot_delays)[0] + layout.params.M])
        raise EstimationError(
            f"irregular pilot spacing {tuple(int(g) for g in gaps)}: auto-ambiguity is not "
            f"supported on a lattice (max LS condition number "
            f"{ls_condition_numbers(layout).max():.3g})"
        )
    k_default, l_default = identifiable_window(layout)
    k_window = k_window or k_default
    doppler_window = doppler_window or l_default
    A = cross_ambiguity(y, pilot_signal(layout), k_window, doppler_window)
    return DDFilter(A.values / layout.E_p, A.k_lo, A.l_lo, layout.params)


def conditioning_determinant(k_p1: int, k_p2: int, M: int, E_p: float) -> float:
    """Magnitude of the two-pilot LS determinant."""
    return E_p / 2 * abs(np.exp(-2j * np.pi * k_p1 / M) - np.exp(-2j * np.pi * k_p2 / M))

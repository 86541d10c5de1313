"""Subframe geometry: interleaved pilots, guard/data regions and 4-QAM mapping."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .dd_core import DDSignal, GridParams

REGULAR = "regular"


@dataclass(frozen=True)
class FrameLayout:
    """Pilot placement and the pilot/guard/data partition of the fundamental region.

    Regions are boolean ``(M, N)`` masks. Pilots sit at Doppler index 0.
    """

    params: GridParams
    Q: int
    pilot_delays: tuple
    k_max: int
    E_d: float
    E_p: float
    pilot_mask: np.ndarray = field(repr=False, compare=False)
    guard_mask: np.ndarray = field(repr=False, compare=False)
    regular: bool = True

    @property
    def data_mask(self) -> np.ndarray:
        return ~(self.pilot_mask | self.guard_mask)

    @property
    def data_indices(self) -> np.ndarray:
        """Flat indices ``k * N + l`` of the data locations, in ascending order."""
        return np.flatnonzero(self.data_mask.reshape(-1))

    @property
    def n_data(self) -> int:
        return int(self.data_mask.sum())

    @property
    def n_info_bits(self) -> int:
        return 2 * self.n_data

    @property
    def nondata_columns(self) -> int:
        return int(np.sum(~self.data_mask.all(axis=1)))

    @property
    def overhead(self) -> float:
        """Fraction of pulsones carrying no information."""
        return 1.0 - self.n_data / self.params.MN

    @property
    def pdr_db(self) -> float:
        return 10.0 * np.log10(self.E_p / self.E_d)

    def regions(self):
        """``(pilot, guard, data)`` as sets of ``(k, l)``."""
        def as_set(mask):
            return {(int(k), int(l)) for k, l in zip(*np.nonzero(mask))}
        return as_set(self.pilot_mask), as_set(self.guard_mask), as_set(self.data_mask)


def _circular_gap(a: int, b: int, M: int) -> int:
    d = abs(a - b) % M
    return min(d, M - d)


def layout_interleaved(params: GridParams, Q: int, k_max: int,
                       spacing: Union[str, Sequence[int]] = REGULAR,
                       E_d: Optional[float] = None, E_p: Optional[float] = None,
                       pdr_db: Optional[float] = None, allow_aliasing: bool = False,
                       left_guard: Optional[int] = None, right_guard: int = 1) -> FrameLayout:
    """Place ``Q`` delay-interleaved pilots and carve out pilot/guard strips.

    Each pilot at ``(k_p, 0)`` owns the strip ``[k_p - 1, k_p + k_max]`` over all
    Doppler bins, flanked by ``left_guard`` (default ``k_max``) guard columns
    below and ``right_guard`` columns above. Everything else carries data.

    Energies: ``E_d`` defaults to the number of data locations (unit energy per
    data symbol); give either ``E_p`` or ``pdr_db``. Without either the
    pilot gets ``E_d`` (unit energy when there is no data).
    """
    M, N = params.M, params.N
    if Q < 1:
        raise ValueError("Q must be >= 1")
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    if isinstance(spacing, str):
        if spacing != REGULAR:
            raise ValueError(f"unknown spacing {spacing!r}")
        if M % Q:
            raise ValueError(f"regular spacing needs Q | M (M={M}, Q={Q})")
        delays = tuple(i * M // Q for i in range(Q))
        regular = True
    else:
        delays = tuple(int(k) for k in spacing)
        if len(delays) != Q:
            raise ValueError(f"expected {Q} pilot delays, got {len(delays)}")
        if any(not 0 <= k < M for k in delays):
            raise ValueError("pilot delays must lie in [0, M)")
        if len(set(delays)) != Q:
            raise ValueError("pilot delays must be distinct")
        regular = sorted(delays) == [sorted(delays)[0] + i * M // Q for i in range(Q)] and M % Q == 0
    if Q > 1:
        gap = min(_circular_gap(a, b, M) for i, a in enumerate(delays) for b in delays[i + 1:])
        need = 1 if allow_aliasing else k_max + 2
        if gap < need:
            raise ValueError(f"pilot spacing {gap} below the required {need}")
    if left_guard is None:
        left_guard = k_max

    pilot_cols = np.zeros(M, bool)
    guard_cols = np.zeros(M, bool)
    for kp in delays:
        pilot_cols[np.arange(kp - 1, kp + k_max + 1) % M] = True
        guard_cols[np.arange(kp - 1 - left_guard, kp - 1) % M] = True
        guard_cols[np.arange(kp + k_max + 1, kp + k_max + 1 + right_guard) % M] = True
    guard_cols &= ~pilot_cols
    pilot_mask = np.repeat(pilot_cols[:, None], N, axis=1)
    guard_mask = np.repeat(guard_cols[:, None], N, axis=1)
    pilot_mask.setflags(write=False)
    guard_mask.setflags(write=False)

    n_data = int(M * N - pilot_mask.sum() - guard_mask.sum())
    if E_d is None:
        E_d = float(n_data)
    if pdr_db is not None:
        if E_p is not None:
            raise ValueError("give E_p or pdr_db, not both")
        E_p = E_d * 10.0 ** (pdr_db / 10.0)
    if E_p is None:
        # all-pilot frames have E_d = 0; fall back to a unit-energy pilot
        E_p = E_d if E_d > 0 else 1.0
    if E_p <= 0 or E_d < 0:
        raise ValueError("energies must be positive")
    return FrameLayout(params, Q, delays, k_max, float(E_d), float(E_p),
                       pilot_mask, guard_mask, regular)


def qam_map(bits) -> np.ndarray:
    """Gray-mapped unit-energy 4-QAM: bit pair ``(b0, b1) -> ((1-2b0) + j(1-2b1)) / sqrt 2``."""
    b = np.asarray(bits, dtype=np.int8).reshape(-1)
    if b.size % 2:
        raise ValueError("4-QAM mapping needs an even number of bits")
    if np.any((b != 0) & (b != 1)):
        raise ValueError("bits must be 0 or 1")
    pairs = b.reshape(-1, 2)
    return ((1 - 2 * pairs[:, 0]) + 1j * (1 - 2 * pairs[:, 1])) / np.sqrt(2)


def qam_demap(symbols) -> np.ndarray:
    """Nearest-point hard decision for :func:`qam_map`."""
    s = np.asarray(symbols).reshape(-1)
    out = np.empty((s.size, 2), np.int8)
    out[:, 0] = s.real < 0
    out[:, 1] = s.imag < 0
    return out.reshape(-1)


@dataclass(frozen=True)
class Subframe:
    signal: DDSignal
    layout: FrameLayout
    tx_bits: np.ndarray
    tx_symbols: np.ndarray


def pilot_signal(layout: FrameLayout) -> DDSignal:
    """``sqrt(E_p / Q)`` at each pilot location ``(k_p, 0)``."""
    g = np.zeros((layout.params.M, layout.params.N), complex)
    g[list(layout.pilot_delays), 0] = np.sqrt(layout.E_p / layout.Q)
    return DDSignal(g, layout.params)


def data_signal(layout: FrameLayout, symbols) -> DDSignal:
    symbols = np.asarray(symbols, complex).reshape(-1)
    if symbols.size != layout.n_data:
        raise ValueError(f"expected {layout.n_data} data symbols, got {symbols.size}")
    flat = np.zeros(layout.params.MN, complex)
    if layout.n_data:
        flat[layout.data_indices] = np.sqrt(layout.E_d / layout.n_data) * symbols
    return DDSignal(flat.reshape(layout.params.M, layout.params.N), layout.params)


def build_subframe(layout: FrameLayout, bits=None, rng: Optional[np.random.Generator] = None) -> Subframe:
    """Data on ``I`` scaled to total energy ``E_d`` plus the interleaved pilot."""
    if bits is None:
        if rng is None:
            raise ValueError("need bits or an rng to draw them")
        bits = rng.integers(0, 2, size=layout.n_info_bits, dtype=np.int8)
    bits = np.asarray(bits, dtype=np.int8).reshape(-1)
    if bits.size != layout.n_info_bits:
        raise ValueError(f"expected {layout.n_info_bits} bits, got {bits.size}")
    symbols = qam_map(bits)
    x = data_signal(layout, symbols) + pilot_signal(layout)
    return Subframe(x, layout, bits, symbols)

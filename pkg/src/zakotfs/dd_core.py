"""Quasi-periodic discrete delay-Doppler signals and twisted convolution."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class GridParams:
    """Zak-OTFS numerology.

    Parameters
    ----------
    M : int
        Delay bins per delay period.
    N : int
        Doppler bins per Doppler period.
    nu_p : float
        Doppler period in Hz. The delay period is ``1 / nu_p``.
    """

    M: int
    N: int
    nu_p: float

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not np.isfinite(self.nu_p) or self.nu_p <= 0:
            raise ValueError(f"nu_p must be positive, got {self.nu_p!r}")

    @property
    def tau_p(self) -> float:
        return 1.0 / self.nu_p

    @property
    def B(self) -> float:
        return self.M * self.nu_p

    @property
    def T(self) -> float:
        return self.N * self.tau_p

    @property
    def MN(self) -> int:
        return self.M * self.N

    @property
    def delay_resolution(self) -> float:
        return self.tau_p / self.M

    @property
    def doppler_resolution(self) -> float:
        return self.nu_p / self.N


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


def extend_values(grid: np.ndarray, kappa, lam) -> np.ndarray:
    """Evaluate the quasi-periodic extension of ``grid`` at integer points.

    ``kappa = k + n*M`` and ``lam = l + m*N`` with ``(k, l)`` in the fundamental
    region map to ``exp(j 2 pi n l / N) * grid[k, l]``. Works elementwise on
    broadcastable integer arrays.
    """
    M, N = grid.shape
    kappa = np.asarray(kappa, dtype=np.int64)
    lam = np.asarray(lam, dtype=np.int64)
    n, k = np.divmod(kappa, M)
    l = np.mod(lam, N)
    # n*l can be large; reduce mod N before forming the phase
    phase = np.exp(2j * np.pi * np.mod(n * l, N) / N)
    return phase * grid[k, l]


@dataclass(frozen=True)
class DDSignal:
    """One subframe: samples on the fundamental region, extended on demand."""

    grid: np.ndarray
    params: GridParams

    def __post_init__(self):
        g = _frozen(self.grid)
        if g.shape != (self.params.M, self.params.N):
            raise ValueError(
                f"grid shape {g.shape} does not match (M, N) = "
                f"({self.params.M}, {self.params.N})"
            )
        if not np.all(np.isfinite(g)):
            raise ValueError("DDSignal values must be finite")
        object.__setattr__(self, "grid", g)

    @classmethod
    def zeros(cls, params: GridParams) -> "DDSignal":
        return cls(np.zeros((params.M, params.N), complex), params)

    def extend(self, kappa, lam):
        """Value at an arbitrary integer DD location (scalar or array)."""
        v = extend_values(self.grid, kappa, lam)
        return v[()] if v.ndim == 0 else v

    def energy(self) -> float:
        return float(np.sum(np.abs(self.grid) ** 2))

    def flatten(self) -> np.ndarray:
        """Flat vector with index ``k * N + l``."""
        return self.grid.reshape(-1)

    def __add__(self, other: "DDSignal") -> "DDSignal":
        _check_params(self.params, other.params)
        return DDSignal(self.grid + other.grid, self.params)

    def __sub__(self, other: "DDSignal") -> "DDSignal":
        _check_params(self.params, other.params)
        return DDSignal(self.grid - other.grid, self.params)

    def __mul__(self, alpha) -> "DDSignal":
        return DDSignal(alpha * self.grid, self.params)

    __rmul__ = __mul__


def extend(x: DDSignal, kappa, lam):
    return x.extend(kappa, lam)


def point_pulse(params: GridParams, k0: int, l0: int, amplitude: complex = 1.0) -> DDSignal:
    """DD point pulse at ``(k0, l0)`` in the fundamental region."""
    if not (0 <= k0 < params.M and 0 <= l0 < params.N):
        raise ValueError(
            f"pulse location ({k0}, {l0}) outside fundamental region "
            f"[0, {params.M}) x [0, {params.N})"
        )
    g = np.zeros((params.M, params.N), complex)
    g[k0, l0] = amplitude
    return DDSignal(g, params)


@dataclass(frozen=True)
class DDFilter:
    """Finite-support tap map ``taps[k - k_lo, l - l_lo] = h[k, l]``.

    Offsets are signed; the delay window always contains ``k = 0``.
    ``params`` is optional and records the grid the taps were computed for.
    """

    taps: np.ndarray
    k_lo: int
    l_lo: int
    params: Optional[GridParams] = field(default=None, compare=False)

    def __post_init__(self):
        t = _frozen(self.taps)
        if t.ndim != 2 or t.size == 0:
            raise ValueError("taps must be a non-empty 2D array")
        object.__setattr__(self, "taps", t)
        object.__setattr__(self, "k_lo", int(self.k_lo))
        object.__setattr__(self, "l_lo", int(self.l_lo))
        if not (self.k_lo <= 0 <= self.k_hi):
            raise ValueError(
                f"delay window [{self.k_lo}, {self.k_hi}] must contain 0"
            )

    @property
    def k_hi(self) -> int:
        return self.k_lo + self.taps.shape[0] - 1

    @property
    def l_hi(self) -> int:
        return self.l_lo + self.taps.shape[1] - 1

    @property
    def k_window(self) -> tuple[int, int]:
        return (self.k_lo, self.k_hi)

    @property
    def l_window(self) -> tuple[int, int]:
        return (self.l_lo, self.l_hi)

    @classmethod
    def delta(cls, k: int = 0, l: int = 0, value: complex = 1.0,
              params: Optional[GridParams] = None) -> "DDFilter":
        """Single tap at ``(k, l)``."""
        return cls.from_taps({(k, l): value}, params=params)

    @classmethod
    def from_taps(cls, taps: dict, params: Optional[GridParams] = None) -> "DDFilter":
        """Build from ``{(k, l): value}``, using the smallest valid window."""
        ks = [k for k, _ in taps] + [0]
        ls = [l for _, l in taps]
        k_lo, k_hi, l_lo, l_hi = min(ks), max(ks), min(ls), max(ls)
        arr = np.zeros((k_hi - k_lo + 1, l_hi - l_lo + 1), complex)
        for (k, l), v in taps.items():
            arr[k - k_lo, l - l_lo] += v
        return cls(arr, k_lo, l_lo, params)

    @classmethod
    def zeros(cls, k_window, l_window, params=None) -> "DDFilter":
        shape = (k_window[1] - k_window[0] + 1, l_window[1] - l_window[0] + 1)
        return cls(np.zeros(shape, complex), k_window[0], l_window[0], params)

    def tap(self, k: int, l: int) -> complex:
        i, j = k - self.k_lo, l - self.l_lo
        if 0 <= i < self.taps.shape[0] and 0 <= j < self.taps.shape[1]:
            return complex(self.taps[i, j])
        return 0j

    def nonzero(self):
        """Yield ``(k, l, value)`` for every nonzero tap."""
        for i, j in zip(*np.nonzero(self.taps)):
            yield self.k_lo + int(i), self.l_lo + int(j), self.taps[i, j]

    def on_window(self, k_window, l_window) -> "DDFilter":
        """Same taps re-windowed (cropped or zero-padded) to the given ranges."""
        out = np.zeros((k_window[1] - k_window[0] + 1, l_window[1] - l_window[0] + 1), complex)
        k0 = max(k_window[0], self.k_lo)
        k1 = min(k_window[1], self.k_hi)
        l0 = max(l_window[0], self.l_lo)
        l1 = min(l_window[1], self.l_hi)
        if k0 <= k1 and l0 <= l1:
            out[k0 - k_window[0]:k1 - k_window[0] + 1, l0 - l_window[0]:l1 - l_window[0] + 1] = \
                self.taps[k0 - self.k_lo:k1 - self.k_lo + 1, l0 - self.l_lo:l1 - self.l_lo + 1]
        return DDFilter(out, k_window[0], l_window[0], self.params)

    def energy(self) -> float:
        return float(np.sum(np.abs(self.taps) ** 2))

    def scaled(self, alpha) -> "DDFilter":
        return DDFilter(alpha * self.taps, self.k_lo, self.l_lo, self.params)


def _check_params(a: Optional[GridParams], b: Optional[GridParams]):
    if a is not None and b is not None and a != b:
        raise ValueError(f"grid mismatch: {a} vs {b}")


def twisted_convolve(h: DDFilter, x: DDSignal) -> DDSignal:
    """Discrete twisted convolution of a finite filter with a quasi-periodic signal.

    ``y[k, l] = sum h[k', l'] x[k - k', l - l'] exp(j 2 pi l' (k - k') / (M N))``
    evaluated on the fundamental region; the result is again quasi-periodic.
    """
    _check_params(h.params, x.params)
    p = x.params
    M, N = p.M, p.N
    kk, ll = np.meshgrid(np.arange(M), np.arange(N), indexing="ij")
    y = np.zeros((M, N), complex)
    for kd, ld, v in h.nonzero():
        shifted = extend_values(x.grid, kk - kd, ll - ld)
        # exp(j2pi l'(k-k')/MN) with the exponent reduced mod MN
        twist = np.exp(2j * np.pi * np.mod(ld * (kk - kd), M * N) / (M * N))
        y += v * twist * shifted
    return DDSignal(y, p)


def twisted_convolve_filters(a: DDFilter, b: DDFilter,
                             params: Optional[GridParams] = None) -> DDFilter:
    """Twisted convolution of two finite tap maps, without quasi-periodic wrap.

    The output window is the Minkowski sum of the input windows. The twist
    phase needs ``M N``, taken from ``params`` or from either filter.
    """
    params = params or a.params or b.params
    if params is None:
        raise ValueError("twisted_convolve_filters needs grid params for the twist phase")
    _check_params(a.params, b.params)
    MN = params.MN
    k_lo, l_lo = a.k_lo + b.k_lo, a.l_lo + b.l_lo
    out = np.zeros((a.taps.shape[0] + b.taps.shape[0] - 1,
                    a.taps.shape[1] + b.taps.shape[1] - 1), complex)
    bk = np.arange(b.k_lo, b.k_hi + 1)
    for ka, la, va in a.nonzero():
        # (a * b)[k, l] += a[ka, la] b[k - ka, l - la] exp(j2pi la (k - ka) / MN), k - ka = bk
        twist = np.exp(2j * np.pi * np.mod(la * bk, MN) / MN)[:, None]
        i0, j0 = ka + b.k_lo - k_lo, la + b.l_lo - l_lo
        out[i0:i0 + b.taps.shape[0], j0:j0 + b.taps.shape[1]] += va * twist * b.taps
    return DDFilter(out, k_lo, l_lo, params)

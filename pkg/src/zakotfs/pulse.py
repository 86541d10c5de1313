"""Factorizable root-raised-cosine DD pulse shaping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dd_core import GridParams

_SINGULAR_TOL = 1e-8


def rrc(x, beta: float):
    """Root-raised-cosine waveform with unit symbol period and unit energy.

    Total function: the removable singularities at ``x = 0`` and
    ``|x| = 1 / (4 beta)`` return their analytic limits.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"roll-off must lie in [0, 1], got {beta}")
    scalar = np.ndim(x) == 0
    x = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(x)

    at_zero = x < _SINGULAR_TOL
    at_edge = np.abs(4.0 * beta * x - 1.0) < _SINGULAR_TOL if beta > 0 else np.zeros_like(at_zero)
    regular = ~(at_zero | at_edge)

    xr = x[regular]
    num = np.sin(np.pi * xr * (1 - beta)) + 4 * beta * xr * np.cos(np.pi * xr * (1 + beta))
    den = np.pi * xr * (1 - (4 * beta * xr) ** 2)
    out[regular] = num / den
    out[at_zero] = 1.0 + beta * (4.0 / np.pi - 1.0)
    if beta > 0:
        a = np.pi / (4 * beta)
        out[at_edge] = beta / np.sqrt(2) * (
            (1 + 2 / np.pi) * np.sin(a) + (1 - 2 / np.pi) * np.cos(a)
        )
    return float(out) if scalar else out


@dataclass(frozen=True)
class RRCFilterSpec:
    """Transmit/receive filter configuration.

    ``cutoff`` is the truncation point (in units of ``1/B`` or ``1/T``) beyond
    which the RRC waveform is treated as zero by quadrature and TD synthesis.
    """

    params: GridParams
    beta_tau: float = 0.6
    beta_nu: float = 0.6
    cutoff: float = 40.0

    def __post_init__(self):
        for name in ("beta_tau", "beta_nu"):
            b = getattr(self, name)
            if not 0.0 <= b <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {b}")
        if self.cutoff <= 0:
            raise ValueError("cutoff must be positive")

    @property
    def B_eff(self) -> float:
        return (1 + self.beta_tau) * self.params.B

    @property
    def T_eff(self) -> float:
        return (1 + self.beta_nu) * self.params.T


def w_tx(spec: RRCFilterSpec, tau, nu):
    """Transmit pulse ``sqrt(BT) rrc(B tau) rrc(nu T)`` (returned as complex)."""
    p = spec.params
    v = np.sqrt(p.B * p.T) * rrc(np.asarray(tau, float) * p.B, spec.beta_tau) \
        * rrc(np.asarray(nu, float) * p.T, spec.beta_nu)
    return np.asarray(v, dtype=complex)[()]


def w_rx(spec: RRCFilterSpec, tau, nu):
    """Matched receive pulse ``conj(w_tx(-tau, -nu)) exp(j 2 pi nu tau)``."""
    tau = np.asarray(tau, float)
    nu = np.asarray(nu, float)
    return (np.conj(w_tx(spec, -tau, -nu)) * np.exp(2j * np.pi * nu * tau))[()]


def simpson_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights for ``n`` (odd) equispaced nodes with step ``h``."""
    if n < 3 or n % 2 == 0:
        raise ValueError("Simpson's rule needs an odd number of nodes >= 3")
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def quadrature_nodes(cutoff: float, nodes_per_cell: int):
    """Symmetric Simpson nodes and weights covering ``[-cutoff, cutoff]``."""
    half = int(np.ceil(cutoff * nodes_per_cell))
    n = 2 * half + 1
    x = np.arange(-half, half + 1) / nodes_per_cell
    return x, simpson_weights(n, 1.0 / nodes_per_cell)

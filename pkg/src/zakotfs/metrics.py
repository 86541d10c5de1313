"""Link-level figures of merit."""

from __future__ import annotations

import numpy as np

from .dd_core import DDFilter


def ber(tx_bits, rx_bits) -> float:
    tx = np.asarray(tx_bits).reshape(-1)
    rx = np.asarray(rx_bits).reshape(-1)
    if tx.shape != rx.shape:
        raise ValueError(f"bit vectors differ in length: {tx.size} vs {rx.size}")
    if tx.size == 0:
        raise ValueError("empty bit vectors")
    return float(np.count_nonzero(tx != rx) / tx.size)


def nmse(h_true: DDFilter, h_hat: DDFilter) -> float:
    """Tap error energy over the support of ``h_true``, normalized by its energy."""
    ref = h_true.energy()
    if ref == 0:
        raise ValueError("true filter has zero energy")
    est = h_hat.on_window(h_true.k_window, h_true.l_window)
    return float(np.sum(np.abs(est.taps - h_true.taps) ** 2) / ref)


def binary_entropy(p) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    if p in (0.0, 1.0):
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def effective_throughput(ber_value: float, n_info_bits: int, B_prime: float, T_prime: float) -> float:
    """Reliable bits per time-frequency degree of freedom, ``(1 - H(ber)) n / (B' T')``."""
    return (1.0 - binary_entropy(ber_value)) * n_info_bits / (B_prime * T_prime)

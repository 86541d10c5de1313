"""Matrix form of the DD input-output relation and MMSE detection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .dd_core import DDFilter, DDSignal, GridParams
from .framing import FrameLayout, pilot_signal, qam_demap


class DetectionError(RuntimeError):
    """Raised when the MMSE normal matrix cannot be factored."""


@dataclass(frozen=True)
class ChannelMatrix:
    """Sparse ``MN x MN`` operator with flat index ``k * N + l`` on rows and columns."""

    H: sp.csr_matrix
    params: GridParams

    def apply(self, x: DDSignal) -> DDSignal:
        y = self.H @ x.flatten()
        return DDSignal(y.reshape(self.params.M, self.params.N), self.params)

    def dense(self) -> np.ndarray:
        return self.H.toarray()

    @staticmethod
    def flat_index(k, l, params: GridParams):
        return np.asarray(k) * params.N + np.asarray(l)

    @staticmethod
    def location(index, params: GridParams):
        return np.divmod(np.asarray(index), params.N)


def build_channel_matrix(h: DDFilter, params: GridParams) -> ChannelMatrix:
    """Assemble the linear operator ``x -> h *σ x`` on the fundamental region.

    Each tap ``(k', l')`` sends input ``x[k - k', l - l']`` (quasi-periodically
    extended) to output ``(k, l)``; the extension phase and the twist become the
    matrix entry.
    """
    if h.params is not None and h.params != params:
        raise ValueError(f"grid mismatch: {h.params} vs {params}")
    M, N, MN = params.M, params.N, params.MN
    kk, ll = np.meshgrid(np.arange(M), np.arange(N), indexing="ij")
    rows_out = (kk * N + ll).ravel()
    rows, cols, vals = [], [], []
    for kd, ld, v in h.nonzero():
        n, ks = np.divmod(kk - kd, M)
        ls = np.mod(ll - ld, N)
        phase = np.mod(n * ls, N) / N + np.mod(ld * (kk - kd), MN) / MN
        rows.append(rows_out)
        cols.append((ks * N + ls).ravel())
        vals.append((v * np.exp(2j * np.pi * phase)).ravel())
    if not rows:
        return ChannelMatrix(sp.csr_matrix((MN, MN), dtype=complex), params)
    H = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(MN, MN))
    H.sum_duplicates()
    return ChannelMatrix(H, params)


@dataclass(frozen=True)
class Detection:
    symbols: np.ndarray
    bits: np.ndarray


def mmse_detect(y: DDSignal, h_hat: DDFilter, layout: FrameLayout, sigma2: float,
                H: ChannelMatrix | None = None) -> Detection:
    """Linear MMSE estimate of the unit-energy data symbols.

    The predicted pilot response is removed first; with
    ``A = sqrt(E_d/|I|) H[:, I]`` the estimate is
    ``(A^H A + sigma2 I)^{-1} A^H y'``, which equals
    ``A^H (A A^H + sigma2 I)^{-1} y'`` but only needs an ``|I| x |I|`` factorization.
    """
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    params = layout.params
    if H is None:
        H = build_channel_matrix(h_hat, params)
    y_res = y.flatten() - H.H @ pilot_signal(layout).flatten()
    idx = layout.data_indices
    if idx.size == 0:
        return Detection(np.zeros(0, complex), np.zeros(0, np.int8))
    A = H.H[:, idx] * np.sqrt(layout.E_d / layout.n_data)
    A = sp.csc_matrix(A)
    gram = (A.conj().T @ A).toarray()
    gram[np.diag_indices_from(gram)] += sigma2
    rhs = A.conj().T @ y_res
    try:
        c = scipy.linalg.cho_factor(gram, check_finite=True)
        x_hat = scipy.linalg.cho_solve(c, rhs)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise DetectionError(f"MMSE normal matrix is singular: {exc}") from exc
    if not np.all(np.isfinite(x_hat)):
        raise DetectionError("MMSE solution is not finite")
    return Detection(x_hat, qam_demap(x_hat))

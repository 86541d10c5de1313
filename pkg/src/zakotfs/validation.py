"""Self-contained numerical checks run by ``zakotfs validate``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .acquisition import (ambiguity_estimate, auto_ambiguity, check_crystallization,
                          conditioning_determinant, identifiable_window, lattice_mask, ls_estimate,
                          readoff_single_pilot)
from .channel import VEH_A, PhysicalChannel, effective_filter, sample_veh_a, veh_a_windows
from .dd_core import DDFilter, DDSignal, GridParams, twisted_convolve
from .equalizer import build_channel_matrix
from .framing import layout_interleaved, pilot_signal
from .pulse import RRCFilterSpec
from .td import papr_db, td_pipeline, td_realize

PARAMS = GridParams(64, 24, 7.5e3)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _lattice_support():
    worst_on, worst_off = 0.0, 0.0
    for q in (1, 2, 4):
        L = layout_interleaved(PARAMS, q, 2, E_p=1.0)
        A = auto_ambiguity(L, (-PARAMS.M, PARAMS.M - 1), (-q * PARAMS.N, q * PARAMS.N - 1))
        mask = lattice_mask(A.k_range, A.l_range, PARAMS.M, PARAMS.N, q)
        worst_on = max(worst_on, np.abs(A.values[mask] - L.E_p).max())
        worst_off = max(worst_off, np.abs(A.values[~mask]).max())
    return worst_on < 1e-10 and worst_off < 1e-10, f"on-lattice err {worst_on:.2e}, off-lattice max {worst_off:.2e}"


def _irregular():
    L = layout_interleaved(PARAMS, 2, 2, spacing=[0, 7], E_p=1.0)
    A = auto_ambiguity(L, (-PARAMS.M, PARAMS.M - 1), (-2 * PARAMS.N, 2 * PARAMS.N - 1))
    k, l = A.k_range[:, None], A.l_range[None, :]
    kr = np.mod(k, PARAMS.M)
    expected = np.isin(kr, (0, 7, PARAMS.M - 7)) & (np.mod(l, PARAMS.N) == 0)
    support = np.abs(A.values) > 1e-10
    return bool(np.array_equal(support, expected)), f"{int(support.sum())} nonzero points"


def _crystallization():
    r1 = check_crystallization(PARAMS, VEH_A.max_delay, 6e3, (1, 2))
    ok = r1.k_max == 2 and not r1.effective_ok_for_Q[1] and r1.effective_ok_for_Q[2]
    return ok, f"k_max={r1.k_max}, l_max(6 kHz)={r1.l_max}"


def _overhead():
    got = [layout_interleaved(PARAMS, q, 2).overhead * 64 for q in (1, 2, 4)]
    return np.allclose(got, [7, 14, 28]), f"overhead x64 = {[round(g, 6) for g in got]}"


def _determinant():
    d = (conditioning_determinant(0, 32, 64, 1.0), conditioning_determinant(0, 16, 64, 1.0))
    return abs(d[0] - 1) < 1e-12 and abs(d[1] - np.sqrt(0.5)) < 1e-12, f"{d[0]:.12f}, {d[1]:.12f}"


def _recovery():
    rng = np.random.default_rng(7)
    worst = 0.0
    for q in (1, 2, 4):
        L = layout_interleaved(PARAMS, q, 2, E_p=3.0)
        kw, lw = identifiable_window(L)
        h = DDFilter(rng.standard_normal((kw[1] - kw[0] + 1, lw[1] - lw[0] + 1))
                     + 1j * rng.standard_normal((kw[1] - kw[0] + 1, lw[1] - lw[0] + 1)), kw[0], lw[0], PARAMS)
        y = twisted_convolve(h, pilot_signal(L))
        ests = [ls_estimate(y, L), ambiguity_estimate(y, L)]
        if q == 1:
            ests.append(readoff_single_pilot(y, 0, 0, L.E_p, kw, lw))
        worst = max(worst, *(np.abs(e.taps - h.taps).max() for e in ests))
    return worst < 1e-8, f"max tap error {worst:.2e}"


def _matrix():
    rng = np.random.default_rng(3)
    h = DDFilter(rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5)), -1, -2, PARAMS)
    x = DDSignal(rng.standard_normal((64, 24)) + 1j * rng.standard_normal((64, 24)), PARAMS)
    err = np.abs(build_channel_matrix(h, PARAMS).apply(x).grid - twisted_convolve(h, x).grid).max()
    return err < 1e-12, f"max abs diff {err:.2e}"


def _unit_path():
    spec = RRCFilterSpec(PARAMS)
    h = effective_filter(PhysicalChannel.single(), spec, (-4, 4), (-4, 4))
    err = abs(h.tap(0, 0) - 1)
    return err < 1e-4, f"|h[0,0] - 1| = {err:.2e}"


def _papr():
    spec = RRCFilterSpec(PARAMS)
    vals = [papr_db(td_realize(pilot_signal(layout_interleaved(PARAMS, q, 2, E_p=1.0)), spec))
            for q in (1, 2, 4)]
    ok = all(abs(v - t) <= 0.5 for v, t in zip(vals, (19.4, 16.4, 13.4)))
    return ok, "PAPR dB " + ", ".join(f"{v:.2f}" for v in vals)


def _td_oracle():
    spec = RRCFilterSpec(PARAMS)
    L = layout_interleaved(PARAMS, 1, 2, E_p=1.0)
    x = pilot_signal(L)
    chan = sample_veh_a(3e3, np.random.default_rng(11))
    kw, lw = veh_a_windows(3e3, PARAMS, margin=24)
    ref = twisted_convolve(effective_filter(chan, spec, kw, lw), x)
    y = td_pipeline(x, chan, spec)
    err = np.linalg.norm(y.grid - ref.grid) / np.linalg.norm(ref.grid)
    return err <= 3e-2, f"relative error {err:.2e}"


CHECKS: dict[str, Callable] = {
    "lattice-support": _lattice_support,
    "irregular-pilot-support": _irregular,
    "crystallization-arithmetic": _crystallization,
    "pilot-overhead": _overhead,
    "conditioning-determinant": _determinant,
    "noise-free-recovery": _recovery,
    "channel-matrix-consistency": _matrix,
    "unit-path-effective-filter": _unit_path,
    "pilot-papr": _papr,
    "td-oracle": _td_oracle,
}


def run_checks() -> list:
    out = []
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out

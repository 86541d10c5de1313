"""Monte-Carlo sweeps, reports and their CSV/manifest outputs."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .acquisition import (EstimationError, ambiguity_estimate, auto_ambiguity, cross_ambiguity,
                          ls_estimate, minimum_pilots)
from .channel import effective_filter, sample_veh_a, snr_to_sigma2, support_bounds
from .config import ExperimentConfig
from .dd_core import DDSignal, twisted_convolve
from .equalizer import DetectionError, build_channel_matrix, mmse_detect
from .framing import FrameLayout, build_subframe, layout_interleaved, pilot_signal
from .metrics import ber, effective_throughput, nmse
from .td import papr_db, td_realize, write_trace_csv

SWEEP_COLUMNS = ("q", "nu_max_hz", "snr_db", "pdr_db", "estimator", "trials", "ber", "nmse", "throughput")
TAG_CHANNEL, TAG_BITS, TAG_NOISE = 0, 1, 2
SEED_DERIVATION = "SeedSequence(entropy=master_seed, spawn_key=(trial, tag)); tags channel=0 bits=1 noise=2"
NUMERICAL_ERRORS = (EstimationError, DetectionError, np.linalg.LinAlgError)


def trial_rng(master_seed: int, trial: int, tag: int) -> np.random.Generator:
    """Independent stream per (trial, purpose); the same for every sweep point."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(trial, tag)))


@dataclass(frozen=True)
class SweepPoint:
    q: int
    nu_max_hz: float
    snr_db: float
    pdr_db: float


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: str
    channel: str
    estimator: str
    ber: Optional[float]
    nmse: Optional[float]
    throughput: Optional[float] = None
    papr_db: Optional[float] = None
    error: Optional[str] = None


@dataclass
class SweepRow:
    point: SweepPoint
    estimator: str
    trial_indices: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    ber: Optional[float] = None
    nmse: Optional[float] = None
    throughput: Optional[float] = None

    @property
    def trials(self) -> int:
        return len(self.trial_indices)

    def csv_values(self) -> list:
        p = self.point
        return [p.q, _fmt(p.nu_max_hz), _fmt(p.snr_db), _fmt(p.pdr_db), self.estimator,
                self.trials, _fmt(self.ber), _fmt(self.nmse), _fmt(self.throughput)]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def make_layout(cfg: ExperimentConfig, q: int, pdr_db: float) -> FrameLayout:
    spacing = cfg.frame.spacing
    return layout_interleaved(cfg.params, q, cfg.k_max, spacing=spacing, pdr_db=pdr_db)


def run_trial(cfg: ExperimentConfig, point: SweepPoint, trial: int, detect: bool = True) -> list:
    """One channel/bit/noise draw evaluated with every configured estimator."""
    params, spec = cfg.params, cfg.filter_spec
    seed = f"{cfg.seed}:{trial}"
    chan = sample_veh_a(point.nu_max_hz, trial_rng(cfg.seed, trial, TAG_CHANNEL))
    kw, lw = support_bounds(cfg.tau_max, point.nu_max_hz, params, cfg.channel.window_margin)
    h = effective_filter(chan, spec, kw, lw)
    H = build_channel_matrix(h, params)
    layout = make_layout(cfg, point.q, point.pdr_db)
    frame = build_subframe(layout, rng=trial_rng(cfg.seed, trial, TAG_BITS))
    sigma2 = snr_to_sigma2(point.snr_db)
    noise_rng = trial_rng(cfg.seed, trial, TAG_NOISE)
    w = noise_rng.standard_normal((params.M, params.N)) + 1j * noise_rng.standard_normal((params.M, params.N))
    y = DDSignal(H.apply(frame.signal).grid + np.sqrt(sigma2 / 2) * w, params)
    summary = f"paths={len(chan.paths)} max|nu|={np.abs(chan.dopplers).max():.6g}"

    records = []
    for est in cfg.estimators:
        try:
            if est == "perfect":
                h_hat, H_hat = h, H
            else:
                h_hat = ls_estimate(y, layout) if est == "ls" else ambiguity_estimate(y, layout)
                H_hat = None
            e = nmse(h, h_hat)
            b = tp = None
            if detect:
                det = mmse_detect(y, h_hat, layout, sigma2, H=H_hat)
                b = ber(frame.tx_bits, det.bits)
                tp = effective_throughput(b, layout.n_info_bits, spec.B_eff, spec.T_eff)
            records.append(TrialRecord(trial, seed, summary, est, b, e, tp))
        except NUMERICAL_ERRORS as exc:
            records.append(TrialRecord(trial, seed, summary, est, None, None, error=f"{type(exc).__name__}: {exc}"))
    return records


def _limit_threads():
    # single-threaded BLAS keeps reductions in a fixed order
    threadpool_limits(1)


def _task(args):
    cfg, point, trial, detect = args
    return run_trial(cfg, point, trial, detect)


def map_trials(tasks: Sequence, workers: int) -> list:
    """Evaluate tasks in order; results are identical for any worker count."""
    if workers <= 1:
        with threadpool_limits(1):
            return [_task(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers, initializer=_limit_threads) as pool:
        return list(pool.map(_task, tasks, chunksize=chunk))


@dataclass
class SweepResult:
    rows: list
    kind: str

    @property
    def failures(self) -> list:
        return [(r.point, r.estimator, f) for r in self.rows for f in r.failures]


def _aggregate(cfg: ExperimentConfig, points: list, results: list, detect: bool) -> list:
    rows = []
    per_point = cfg.trials
    for i, point in enumerate(points):
        trial_records = results[i * per_point:(i + 1) * per_point]
        for est in cfg.estimators:
            row = SweepRow(point, est)
            bers, nmses = [], []
            for recs in trial_records:
                rec = next(r for r in recs if r.estimator == est)
                if rec.error is not None:
                    row.failures.append({"trial": rec.trial, "seed": rec.seed, "error": rec.error})
                    continue
                row.trial_indices.append(rec.trial)
                nmses.append(rec.nmse)
                if detect:
                    bers.append(rec.ber)
            if row.trial_indices:
                row.nmse = float(np.mean(nmses))
                if detect:
                    row.ber = float(np.mean(bers))
                    layout = make_layout(cfg, point.q, point.pdr_db)
                    spec = cfg.filter_spec
                    row.throughput = effective_throughput(row.ber, layout.n_info_bits, spec.B_eff, spec.T_eff)
            rows.append(row)
    return rows


def _run(cfg: ExperimentConfig, points: list, detect: bool, kind: str) -> SweepResult:
    tasks = [(cfg, p, t, detect) for p in points for t in range(cfg.trials)]
    results = map_trials(tasks, cfg.workers)
    return SweepResult(_aggregate(cfg, points, results, detect), kind)


def sweep_points(cfg: ExperimentConfig, q_values=None) -> list:
    qs = q_values if q_values is not None else cfg.frame.Q
    if not isinstance(cfg.frame.spacing, str):
        qs = [len(cfg.frame.spacing)]
    return [SweepPoint(int(q), float(nu), float(snr), float(pdr))
            for q, nu, snr, pdr in product(qs, cfg.channel.nu_max_hz, cfg.frame.snr_db, cfg.frame.pdr_db)]


def run_ber_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Mean BER, NMSE and throughput over ``Q x nu_max x SNR x PDR x estimator``."""
    return _run(cfg, sweep_points(cfg), True, "ber-sweep")


def run_nmse_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Estimation error only; BER and throughput columns are left blank."""
    return _run(cfg, sweep_points(cfg), False, "nmse-sweep")


def run_pdr_sweep(cfg: ExperimentConfig) -> SweepResult:
    """BER against pilot-to-data ratio; iterates ``frame.pdr_db`` like any other axis."""
    return _run(cfg, sweep_points(cfg), True, "pdr-sweep")


def auto_q(cfg: ExperimentConfig, nu_max: float, candidates=(1, 2, 4)) -> int:
    """Fewest pilots meeting the effective crystallization condition (largest candidate if none)."""
    q = minimum_pilots(cfg.params, cfg.tau_max, nu_max, candidates)
    return q if q is not None else max(candidates)


def run_throughput_sweep(cfg: ExperimentConfig) -> SweepResult:
    points = [SweepPoint(auto_q(cfg, nu), float(nu), float(snr), float(pdr))
              for nu, snr, pdr in product(cfg.channel.nu_max_hz, cfg.frame.snr_db, cfg.frame.pdr_db)]
    return _run(cfg, points, True, "throughput")


def write_sweep_csv(result: SweepResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in result.rows:
            w.writerow(row.csv_values())


def write_manifest(result: SweepResult, cfg: ExperimentConfig, path) -> None:
    """Sidecar JSON with the seed derivation and per-row trial provenance."""
    doc = {
        "kind": result.kind,
        "master_seed": cfg.seed,
        "seed_derivation": SEED_DERIVATION,
        "config": cfg.to_dict() | {"workers": None, "output": None},
        "rows": [{
            "q": r.point.q, "nu_max_hz": r.point.nu_max_hz, "snr_db": r.point.snr_db,
            "pdr_db": r.point.pdr_db, "estimator": r.estimator,
            "trial_indices": r.trial_indices, "failures": r.failures,
        } for r in result.rows],
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def heatmap_rows(values: np.ndarray, k_range, l_range):
    for i, k in enumerate(k_range):
        for j, l in enumerate(l_range):
            yield int(k), int(l), float(np.abs(values[i, j]))


def write_heatmap_csv(values, k_range, l_range, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("k", "l", "magnitude"))
        for k, l, m in heatmap_rows(values, k_range, l_range):
            w.writerow((k, l, repr(m)))


def run_ambiguity_report(cfg: ExperimentConfig, out_dir) -> list:
    """Auto- and cross-ambiguity magnitudes over two delay periods and ``2QN`` Doppler bins.

    The cross-ambiguity uses one noise-free Veh-A draw (trial 0) at the first
    configured ``nu_max``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params, spec = cfg.params, cfg.filter_spec
    nu = cfg.channel.nu_max_hz[0]
    chan = sample_veh_a(nu, trial_rng(cfg.seed, 0, TAG_CHANNEL))
    kw, lw = support_bounds(cfg.tau_max, nu, params, cfg.channel.window_margin)
    h = effective_filter(chan, spec, kw, lw)
    written = []
    qs = sorted({p.q for p in sweep_points(cfg)})
    for q in qs:
        layout = make_layout(cfg, q, cfg.frame.pdr_db[0])
        k_window = (-params.M, params.M - 1)
        l_window = (-q * params.N, q * params.N - 1)
        tag = f"q{q}_" + "-".join(str(k) for k in layout.pilot_delays)
        auto = auto_ambiguity(layout, k_window, l_window)
        xp = pilot_signal(layout)
        cross = cross_ambiguity(twisted_convolve(h, xp), xp, k_window, l_window)
        for kind, surf in (("auto", auto), ("cross", cross)):
            path = out_dir / f"ambiguity_{kind}_{tag}.csv"
            write_heatmap_csv(surf.values, surf.k_range, surf.l_range, path)
            written.append(path)
    return written


def run_papr_report(cfg: ExperimentConfig, out_dir=None) -> list:
    """Pilot-only PAPR per ``Q``; returns ``[(q, papr_db)]``."""
    spec = cfg.filter_spec
    rows = []
    for q in sorted(set(cfg.frame.Q)):
        layout = layout_interleaved(cfg.params, q, cfg.k_max, E_p=1.0)
        s = td_realize(pilot_signal(layout), spec, cfg.frame.oversample)
        rows.append((q, papr_db(s)))
        if out_dir is not None and cfg.write_traces:
            write_trace_csv(s, Path(out_dir) / f"td_trace_q{q}.csv")
    if out_dir is not None:
        with open(Path(out_dir) / "papr.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("q", "papr_db"))
            for q, v in rows:
                w.writerow((q, repr(v)))
    return rows

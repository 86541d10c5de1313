"""Command-line entry point."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .sim import (run_ambiguity_report, run_ber_sweep, run_nmse_sweep, run_papr_report,
                  run_pdr_sweep, run_throughput_sweep, write_manifest, write_sweep_csv)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

SWEEPS = {
    "ber-sweep": run_ber_sweep,
    "nmse-sweep": run_nmse_sweep,
    "throughput": run_throughput_sweep,
    "pdr-sweep": run_pdr_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zakotfs", description="Zak-OTFS interleaved-pilot link simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*SWEEPS, "ambiguity", "papr", "validate"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="YAML or JSON experiment config")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--workers", type=int)
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    out = str(args.out) if args.out is not None else None
    try:
        return cfg.with_overrides(seed=args.seed, trials=args.trials, workers=args.workers, output=out)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _run_validate() -> int:
    from .validation import run_checks
    results = run_checks()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERICAL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return _run_validate()
    try:
        cfg = resolve_config(args)
        out = Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "ambiguity":
            for path in run_ambiguity_report(cfg, out):
                print(path)
            return EXIT_OK
        if args.command == "papr":
            for q, v in run_papr_report(cfg, out):
                print(f"Q={q}: {v:.2f} dB")
            return EXIT_OK
        result = SWEEPS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # layout and grid constraints violated by the requested configuration
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    stem = args.command.replace("-", "_")
    csv_path = out / f"{stem}.csv"
    write_sweep_csv(result, csv_path)
    write_manifest(result, cfg, out / f"{stem}.manifest.json")
    print(csv_path)
    if result.failures:
        for point, est, f in result.failures:
            print(f"numerical failure: seed={f['seed']} trial={f['trial']} estimator={est} "
                  f"q={point.q} nu_max_hz={point.nu_max_hz}: {f['error']}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

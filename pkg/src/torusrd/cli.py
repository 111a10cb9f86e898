"""Command-line entry point: run an experiment preset and emit its report."""
from __future__ import annotations

import argparse
import sys
from dataclasses import asdict

from .harness import PRESETS, ExperimentConfig, run_preset
from .report import emit_report

# presets whose defaults differ from the ExperimentConfig base defaults
PRESET_OVERRIDES = {
    "scheme-order": {"n_list": [16, 32, 64], "birth": "linear:1",
                     "death": "power:2", "phi": "one+half-sin2"},
    "domination-check": {"n_list": [8], "replicas": 200},
}


def default_config(preset: str, seed: int | None = None) -> ExperimentConfig:
    cfg = ExperimentConfig(preset=preset, **PRESET_OVERRIDES.get(preset, {}))
    if seed is not None:
        cfg = ExperimentConfig(**{**asdict(cfg), "seed": seed})
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torusrd",
        description="random walks with creation-annihilation on the torus")
    sub = parser.add_subparsers(dest="preset", required=True)
    for preset in PRESETS:
        p = sub.add_parser(preset, help=f"run the {preset} experiment")
        p.add_argument("--config", help="JSON file of ExperimentConfig fields")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--workers", type=int, default=1,
                       help="process-pool size (results are worker-count invariant)")
        p.add_argument("--out", default="reports",
                       help="directory for CSV/JSON/SVG output")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
        if cfg.preset != args.preset:
            raise SystemExit(f"config file is for preset {cfg.preset!r}, "
                             f"not {args.preset!r}")
        if args.seed is not None:
            cfg = ExperimentConfig(**{**asdict(cfg), "seed": args.seed})
    else:
        cfg = default_config(args.preset, args.seed)
    report = run_preset(cfg, workers=args.workers)
    paths = emit_report(report, args.out)
    status = "PASS" if report.passed else "FAIL"
    print(f"{report.preset}: {status}")
    for p in paths:
        print(f"  wrote {p}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())

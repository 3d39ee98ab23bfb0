"""Command-line front-end: run sweeps, tune step parameters, redraw plots."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from itertools import product
from pathlib import Path

import numpy as np

from .harness import MetricsRecord, run_scenario
from .report import emit_csv, emit_plots, record_from_csv
from .scenario import ConfigError, Scenario, load_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _apply_overrides(scn: Scenario, args) -> Scenario:
    updates = {}
    if args.runs is not None:
        updates["n_runs"] = args.runs
    if args.channels is not None:
        updates["n_channels"] = args.channels
    if args.seed is not None:
        updates["base_seed"] = args.seed
    return replace(scn, **updates) if updates else scn


def _cmd_run(args) -> int:
    scn = load_scenario(args.config)
    scn = _apply_overrides(scn, args)
    rec = run_scenario(scn, parallel=args.parallel)
    paths = emit_csv(rec, args.out)
    paths += emit_plots(rec, args.out)
    for power, label, sinr, n_valid in rec.sinr_rows:
        print(f"leakage {power:7.1f} dB  {label:<18s} SINR {sinr:7.2f} dB  ({n_valid} runs)")
    for label, rate in sorted(rec.wallclock.items()):
        print(f"throughput {label:<18s} {rate:9.0f} samples/s")
    for (power, label), count in sorted(rec.diverged.items()):
        print(f"diverged   {label:<18s} at {power:g} dB: {count} run(s) excluded")
    print("wrote: " + ", ".join(str(p) for p in paths))
    return EXIT_OK


def _cmd_sweep_tune(args) -> int:
    scn = load_scenario(args.config)
    scn = _apply_overrides(scn, args)
    params = [p.strip() for p in args.param.split(",") if p.strip()]
    allowed = {"step_size", "reg", "coupling"}
    bad = set(params) - allowed
    if bad:
        raise ConfigError(f"tunable parameters are {sorted(allowed)}, got {sorted(bad)}")
    factors = [float(f) for f in args.factors.split(",")]
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    lines = []
    for idx, spec in enumerate(scn.algorithms):
        if spec.name not in ("saf-real", "saf-complex"):
            continue
        for power in scn.leakage_sweep_db:
            base = spec.resolved(power)
            best = (-np.inf, None)
            for combo in product(factors, repeat=len(params)):
                trial = dict(base)
                for key, f in zip(params, combo):
                    trial[key] = float(trial.get(key, 0.1)) * f
                probe = replace(
                    scn,
                    leakage_sweep_db=(power,),
                    algorithms=[replace(spec, params=trial, tuned={})],
                    n_runs=max(1, min(scn.n_runs, 2)),
                    n_channels=1,
                    norm_study=None,
                )
                rec = run_scenario(probe)
                sinr = next(
                    s for p, lab, s, n in rec.sinr_rows if lab == spec.label and n > 0
                )
                if sinr > best[0]:
                    best = (sinr, trial)
            lines.append(f'[algorithms.tuned."{power:g}"]  # {spec.label}: {best[0]:.2f} dB')
            for key in params:
                lines.append(f"{key} = {best[1][key]:.6g}")
            lines.append("")
    text = "\n".join(lines)
    (outdir / "tuned.toml").write_text(text, encoding="utf-8")
    print(text)
    print(f"wrote: {outdir / 'tuned.toml'}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    rec = record_from_csv(args.dir)
    if not rec.sinr_rows and not rec.wnorm_traces:
        print(f"no result CSVs found in {args.dir}", file=sys.stderr)
        return EXIT_IO
    paths = emit_plots(rec, args.dir)
    print("wrote: " + ", ".join(str(p) for p in paths))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imdcancel",
        description="Simulation harness for spline-based cancellation of "
        "even-order intermodulation self-interference.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario sweep and emit CSV + plots")
    p_run.add_argument("config", help="scenario TOML file")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--runs", type=int, default=None)
    p_run.add_argument("--channels", type=int, default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--parallel", type=int, default=1)
    p_run.set_defaults(func=_cmd_run)

    p_tune = sub.add_parser("sweep-tune", help="grid-search step parameters per power")
    p_tune.add_argument("config")
    p_tune.add_argument("--param", default="step_size,reg,coupling",
                        help="comma list out of step_size,reg,coupling")
    p_tune.add_argument("--factors", default="0.3,1,3",
                        help="multiplicative grid around the configured values")
    p_tune.add_argument("--out", required=True)
    p_tune.add_argument("--runs", type=int, default=None)
    p_tune.add_argument("--channels", type=int, default=None)
    p_tune.add_argument("--seed", type=int, default=None)
    p_tune.set_defaults(func=_cmd_sweep_tune)

    p_plot = sub.add_parser("plot", help="re-render plots from emitted CSV files")
    p_plot.add_argument("dir", help="directory holding the result CSVs")
    p_plot.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

    etdw simulate  --config FILE [--config FILE ...] [--set key=value] [--seed N] [--out DIR]
    etdw calibrate --config FILE [--runs N] [--out DIR]
    etdw compare   --config FILE [--out DIR]
    etdw report    --trace FILE [--out DIR]

Exit codes: 0 success, 2 configuration error, 3 numeric failure, 4 alarm
raised with ``--fail-on-alarm``. The default output directory is taken from
``ETDW_OUTPUT_DIR`` and falls back to the current directory.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .config import build_scenario, load_settings
from .errors import CalibrationError, ConfigurationError, NumericError
from .simulation import calibrate_scenario, compare_schemes, run_scenario
from .traces import read_trace_csv, write_figure_series, write_summary, write_trace_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_ALARM = 4

OUTPUT_ENV = "ETDW_OUTPUT_DIR"


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", action="append", default=[], metavar="FILE",
                   help="scenario file; repeat to layer several, later ones win")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", dest="overrides",
                   help="override one scenario key")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--out", default=None, help=f"output directory (default ${OUTPUT_ENV} or .)")
    p.add_argument("--fail-on-alarm", action="store_true", help="exit with 4 if any alarm fires")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="etdw", description="Event-triggered dynamic watermarking simulator")
    sub = parser.add_subparsers(dest="verb", required=True)
    sim = sub.add_parser("simulate", help="run one scenario, write trace CSV and summary JSON")
    _common(sim)
    cal = sub.add_parser("calibrate", help="fit detector thresholds on attack-free runs")
    _common(cal)
    cal.add_argument("--runs", type=int, default=None, help="number of attack-free runs")
    cmp_ = sub.add_parser("compare", help="run the scenario under ETDW and both CDW baselines")
    _common(cmp_)
    rep = sub.add_parser("report", help="split a trace into per-figure CSV series")
    rep.add_argument("--trace", required=True, help="trace CSV written by simulate")
    rep.add_argument("--out", default=None, help=f"output directory (default ${OUTPUT_ENV} or .)")
    return parser


def _out_dir(arg) -> Path:
    out = Path(arg if arg is not None else os.environ.get(OUTPUT_ENV, "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _scenario(args):
    if not args.config:
        raise ConfigurationError("at least one --config file is required")
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return build_scenario(load_settings(args.config, overrides))


def _simulate(args) -> int:
    cfg = _scenario(args)
    out = _out_dir(args.out)
    result = run_scenario(cfg)
    write_trace_csv(result.trace, out / "trace.csv")
    write_summary(result.summary, out / "summary.json")
    print(json.dumps({"alarm_step": result.summary["alarm_step"],
                      "violation_step": result.summary["violation_step"],
                      "triggering_rate": result.summary["triggering_rate"]}))
    if args.fail_on_alarm and result.summary["alarm_step"] is not None:
        return EXIT_ALARM
    return EXIT_OK


def _calibrate(args) -> int:
    cfg = _scenario(args)
    out = _out_dir(args.out)
    runs = cfg.calibration_runs if args.runs is None else args.runs
    cal = calibrate_scenario(cfg, runs, cfg.calibration_slack)
    doc = {"mode": cfg.mode, "runs": runs, "slack": cfg.calibration_slack,
           **dataclasses.asdict(cal.params)}
    if cal.residual_cov is not None:
        doc["residual_cov"] = cal.residual_cov
    write_summary(doc, out / "test_params.json")
    print(json.dumps({k: doc[k] for k in ("kappa1", "kappa2", "added")}))
    return EXIT_OK


def _compare(args) -> int:
    cfg = _scenario(args)
    out = _out_dir(args.out)
    report = compare_schemes(cfg)
    combined = {}
    for mode, entry in report.items():
        write_summary(entry["summary"], out / f"{mode}_summary.json")
        combined[mode] = {key: entry["summary"][key] for key in
                          ("alarm_step", "alarm_tests", "violation_step", "triggering_rate",
                           "attack_power_final", "mean_trace_psi")}
    write_summary(combined, out / "report.json")
    print(json.dumps({mode: v["alarm_step"] for mode, v in combined.items()}))
    if args.fail_on_alarm and any(v["alarm_step"] is not None for v in combined.values()):
        return EXIT_ALARM
    return EXIT_OK


def _report(args) -> int:
    path = Path(args.trace)
    if not path.is_file():
        raise ConfigurationError(f"trace file not found: {path}")
    try:
        cols = read_trace_csv(path)
    except (ValueError, StopIteration) as exc:
        raise ConfigurationError(f"cannot parse trace {path}: {exc}") from exc
    for path in write_figure_series(cols, _out_dir(args.out)):
        print(path)
    return EXIT_OK


_VERBS = {"simulate": _simulate, "calibrate": _calibrate, "compare": _compare, "report": _report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    try:
        return _VERBS[args.verb](args)
    except (ConfigurationError, CalibrationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

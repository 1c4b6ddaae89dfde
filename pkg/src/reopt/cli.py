"""Command-line front end.

Subcommands:

    price       single valuation, prints the option value at V0 and the
                time-0 spot exercise threshold
    threshold   full per-time-step threshold curve as CSV
    sweep       a named figure preset or the sweep from the config file
    validate    calibration feasibility and moment report only

Exit codes: 0 success, 2 configuration error, 3 infeasible calibration,
4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .calibration import CalibrationInfeasible, calibrate
from .experiments import (
    ConfigError,
    RunConfig,
    config_hash,
    moment_report_text,
    parse_config,
    preset_hash,
    preset_names,
    run_preset,
    run_single,
    run_sweep,
    write_sweep_csv,
    write_threshold_curve_csv,
    write_value_curve_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reopt",
        description="Utility-indifference valuation of finite-horizon real options",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, preset: bool = False) -> None:
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", help="output CSV path")
        p.add_argument("--dt", type=float, help="override the grid time step")
        p.add_argument("--workers", type=int, default=1, help="parallel sweep workers")
        if preset:
            p.add_argument("--preset", choices=preset_names(), help="named figure preset")

    common(sub.add_parser("price", help="value a single configuration"))
    common(sub.add_parser("threshold", help="emit the full threshold curve"))
    common(sub.add_parser("sweep", help="run a parameter sweep"), preset=True)
    common(sub.add_parser("validate", help="check calibration and moments"))
    return parser


def _load_config(args) -> tuple[RunConfig, object]:
    if not args.config:
        raise ConfigError("--config is required for this command")
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        raise _IOFailure(f"cannot read config: {exc}") from exc
    cfg, sweep = parse_config(text)
    if args.dt is not None:
        if args.dt <= 0.0:
            raise ConfigError("--dt must be positive")
        cfg = replace(cfg, dt=args.dt)
        if sweep is not None:
            sweep = replace(sweep, base=cfg)
    return cfg, sweep


class _IOFailure(Exception):
    pass


def _cmd_price(args) -> int:
    cfg, _ = _load_config(args)
    res = run_single(cfg)
    if res.error:
        raise CalibrationInfeasible(res.error)
    print(f"option_value_v0   = {res.option_value_v0:.12g}")
    print(f"threshold_spot_t0 = {res.threshold_spot_t0:.12g}")
    print(f"grid              = {2 * res.m + 1} x {res.n + 1} (M={res.m}, N={res.n})")
    if res.anomaly_flags:
        print(f"flags             = {res.anomaly_flags}")
    return EXIT_OK


def _cmd_threshold(args) -> int:
    cfg, _ = _load_config(args)
    res = run_single(cfg, outputs=("threshold_at_t0", "threshold_curve"))
    if res.error:
        raise CalibrationInfeasible(res.error)
    out = args.out or "threshold_curve.csv"
    _write(write_threshold_curve_csv, res.threshold_curve, out, config_hash(cfg))
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    if args.preset:
        results = run_preset(args.preset, workers=args.workers, dt=args.dt)
        root = preset_hash(args.preset, args.dt)
        out = args.out or f"{args.preset}.csv"
    else:
        cfg, sweep = _load_config(args)
        if sweep is None:
            raise ConfigError("config has no sweep section and no --preset given")
        results = run_sweep(sweep, workers=args.workers)
        root = config_hash(cfg, sweep)
        out = args.out or "sweep.csv"
    _write(write_sweep_csv, results, out, root)
    stem = out[:-4] if out.endswith(".csv") else out
    for res in results:
        if res.value_points is not None:
            side = f"{stem}_value_{res.swept_name}={res.swept_value:g}.csv"
            _write(write_value_curve_csv, res.value_points, side, root)
        if res.threshold_curve is not None:
            side = f"{stem}_curve_{res.swept_name}={res.swept_value:g}.csv"
            _write(write_threshold_curve_csv, res.threshold_curve, side, root)
    errors = sum(1 for r in results if r.error)
    print(f"wrote {out} ({len(results)} rows, {errors} infeasible)")
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg, _ = _load_config(args)
    calibrate(cfg.market, cfg.dt, cfg.p_tol)
    print(moment_report_text(cfg))
    return EXIT_OK


def _write(writer, payload, path, root) -> None:
    try:
        writer(payload, path, root)
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc}") from exc


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "price": _cmd_price,
        "threshold": _cmd_threshold,
        "sweep": _cmd_sweep,
        "validate": _cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CalibrationInfeasible as exc:
        print(f"infeasible calibration: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except _IOFailure as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())

"""Command-line interface: ``loadcnn {synth,ingest,train,forecast,scan,report}``.

Exit codes: 0 success, 2 usage or configuration error, 3 data error,
4 numerical failure.  Errors are reported as a single ``error: <Kind>: <message>``
line on stderr.  Every command prints its fully resolved configuration first.
"""
from __future__ import annotations

import argparse
import logging
import sys
from datetime import date, datetime, timezone
from pathlib import Path

from . import __version__
from .config import (build_network_config, build_training_config, format_kv, read_grid, read_kv,
                     training_values)
from .dataset import SplitSpec, prepare, training_region_end
from .errors import ConfigError, DataError, LoadCnnError, NumericError
from .forecast import (DIRECT_HORIZON, ForecastMode, build_slp, evaluate,
                       iterative_forecaster, predict_direct, predict_iterative, slp_forecaster)
from .ingest import (DEFAULT_EPOCH, GapPolicy, ReadingFormat, aggregate, align, assemble_series,
                     format_simple_csv, format_timestamp, infer_step_minutes, load_series,
                     read_readings, resample_to_15min, select_households)
from .nn import dumps_network, loads_network
from .report import read_cells, render_report, timings_csv
from .dataset import NormStats
from .scan import ScanGrid, run_scan
from .synth import SynthConfig, generate_fleet

log = logging.getLogger("loadcnn")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4

TRAIN_DEFAULTS = {
    "input_len": 672, "kernel_size": 9, "n_filters": 16, "dense_size": 6,
    "batch_size": 128, "epochs": 40, "seed": 0,
    "lr": 0.002, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8, "schedule_decay": 0.004,
    "val_fraction": 0.2, "mode": "direct",
}


def _print_config(command: str, values: dict):
    print(f"# loadcnn {__version__} {command}")
    for key, value in values.items():
        print(f"# {key} = {value}")
    sys.stdout.flush()


def _date(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD, got {text!r}") from None


def _datetime(text: str) -> datetime:
    try:
        ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an ISO-8601 timestamp, got {text!r}") from None
    return ts if ts.tzinfo else ts.replace(tzinfo=timezone.utc)


# -- synth -------------------------------------------------------------------

def cmd_synth(args) -> int:
    cfg = SynthConfig(n_households=args.households, days=args.days, seed=args.seed,
                      **({"start": args.start} if args.start else {}))
    _print_config("synth", {**vars(cfg), "out": args.out, "aggregate_only": args.aggregate_only})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fleet = generate_fleet(cfg)
    if not args.aggregate_only:
        for s in fleet:
            (out / f"{s.label}.csv").write_text(format_simple_csv(s), encoding="utf-8")
    total = aggregate(fleet)
    (out / "aggregate.csv").write_text(format_simple_csv(total), encoding="utf-8")
    print(f"wrote {0 if args.aggregate_only else len(fleet)} household file(s) and "
          f"{out / 'aggregate.csv'} ({len(total)} slots)")
    return 0


# -- ingest ------------------------------------------------------------------

def cmd_ingest(args) -> int:
    fmt = ReadingFormat(args.format)
    policy = GapPolicy(args.gap_policy)
    _print_config("ingest", {"input": ",".join(args.input), "format": fmt.value,
                             "epoch": args.epoch.isoformat(), "households": args.households,
                             "seed": args.seed, "gap_policy": policy.value, "out": args.out})
    readings = []
    for path in args.input:
        readings.extend(read_readings(path, fmt, args.epoch))
    if not readings:
        raise DataError("no readings found")
    pool = sorted({r.meter_id for r in readings})
    n = args.households or len(pool)
    chosen = select_households(pool, n, args.seed).chosen
    by_meter: dict[str, list] = {}
    for r in readings:
        by_meter.setdefault(r.meter_id, []).append(r)
    series = []
    for meter in chosen:
        own = by_meter[meter]
        series.append(resample_to_15min(assemble_series(own, meter, infer_step_minutes(own), policy)))
    total = aggregate(align(series))
    Path(args.out).write_text(format_simple_csv(total), encoding="utf-8")
    print(f"aggregated {len(chosen)} of {len(pool)} meters into {args.out} ({len(total)} slots)")
    return 0


# -- train -------------------------------------------------------------------

def _resolve(args, keys, defaults) -> dict:
    values = dict(defaults)
    if getattr(args, "config", None):
        values.update(training_values(read_kv(args.config), args.config))
    for key in keys:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return values


def _horizon(values: dict) -> int:
    if values["mode"] == ForecastMode.ITERATIVE.value:
        return 1
    return values.get("horizon", DIRECT_HORIZON)


def write_stats(path: Path, stats: NormStats, mode: str, label: str):
    path.write_text(format_kv({"mean": repr(stats.mean), "sd": repr(stats.sd),
                               "mode": mode, "label": label}), encoding="utf-8")


def read_stats(path: Path) -> tuple[NormStats, str]:
    kv = read_kv(path)
    try:
        return NormStats(float(kv["mean"]), float(kv["sd"])), kv.get("mode", "direct")
    except (KeyError, ValueError):
        raise ConfigError(f"{path}: needs numeric mean and sd") from None


def cmd_train(args) -> int:
    values = _resolve(args, list(TRAIN_DEFAULTS) + ["horizon"], TRAIN_DEFAULTS)
    if values["mode"] not in ("direct", "iterative"):
        raise ConfigError(f"mode must be direct or iterative, got {values['mode']!r}")
    values["horizon"] = _horizon(values)
    _print_config("train", {"data": args.data, "meter": args.meter, "out": args.out, **values})
    net_cfg = build_network_config(values)
    tcfg = build_training_config(values)
    series = load_series(args.data, args.meter)
    spec = SplitSpec(values["val_fraction"])
    train_set, val_set = prepare(series, net_cfg.input_len, net_cfg.horizon, spec)
    from .train import train
    net, report = train(net_cfg, tcfg, train_set, val_set)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(dumps_network(net), encoding="utf-8")
    write_stats(out.with_name(out.name + ".stats"), train_set.stats, values["mode"], series.label)
    sd2 = train_set.stats.sd ** 2
    lines = ["epoch,train_loss,val_mse_norm,val_mse_phys"]
    lines += [f"{i + 1},{tl!r},{vl!r},{vl * sd2!r}"
              for i, (tl, vl) in enumerate(zip(report.train_loss, report.val_mse))]
    out.with_name(out.name + ".report.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    print(f"final train loss {report.train_loss[-1]:.6g} (normalised)")
    print(f"validation MSE {report.final_val_mse:.6g} (normalised), "
          f"{report.final_val_mse_phys:.6g} (kWh/slot)^2")
    if values["mode"] == "iterative":
        _, val_direct = prepare(series, net_cfg.input_len, DIRECT_HORIZON, spec)
        phys = evaluate(iterative_forecaster(net, train_set.stats), val_direct)
        print(f"iterative {DIRECT_HORIZON}-step validation MSE {phys:.6g} (kWh/slot)^2")
        val_for_slp = val_direct
        end = training_region_end(len(series), net_cfg.input_len, DIRECT_HORIZON, spec)
    else:
        val_for_slp = val_set
        end = training_region_end(len(series), net_cfg.input_len, net_cfg.horizon, spec)
    try:
        slp = build_slp(series.slice(0, end))
    except DataError as exc:
        print(f"standard load profile baseline skipped: {exc}")
    else:
        steps = val_for_slp.h
        print(f"standard load profile validation MSE "
              f"{evaluate(slp_forecaster(slp, steps), val_for_slp):.6g} (kWh/slot)^2")
    print(f"wrote {out} ({net.parameter_count} parameters, {report.wall_time_s:.1f} s)")
    return 0


# -- forecast ----------------------------------------------------------------

def cmd_forecast(args) -> int:
    model = Path(args.model)
    net = loads_network(model.read_text(encoding="utf-8"))
    stats, trained_mode = read_stats(model.with_name(model.name + ".stats"))
    mode = args.mode or trained_mode
    _print_config("forecast", {"model": args.model, "data": args.data, "meter": args.meter,
                               "mode": mode, "steps": args.steps, "out": args.out})
    series = load_series(args.data, args.meter)
    W = net.config.input_len
    if len(series) < W:
        raise DataError(f"need at least {W} slots of history, got {len(series)}")
    window = series.values[-W:]
    origin = series.slot_start(len(series))
    if mode == "direct":
        result = predict_direct(net, window, stats, origin, horizon=args.steps)
    else:
        result = predict_iterative(net, window, stats, args.steps, origin)
    step = series.step
    rows = ["timestamp,forecast_kwh"]
    rows += [f"{format_timestamp(ts + step)},{float(v)!r}"
             for ts, v in zip(result.timestamps(), result.values)]
    Path(args.out).write_text("\n".join(rows) + "\n", encoding="utf-8")
    print(f"wrote {len(result.values)} forecast rows to {args.out}")
    return 0


# -- scan / report -----------------------------------------------------------

def cmd_scan(args) -> int:
    values = _resolve(args, list(TRAIN_DEFAULTS) + ["horizon"], TRAIN_DEFAULTS)
    values["horizon"] = _horizon(values)
    grid = read_grid(args.grid) if args.grid else ScanGrid()
    if args.seed is not None:
        grid = ScanGrid(grid.kernel_sizes, grid.filter_counts, grid.dense_sizes, (args.seed,))
    _print_config("scan", {"data": args.data, "meter": args.meter, "out": args.out,
                           "workers": args.workers, "timings": args.timings,
                           "kernel_sizes": ",".join(map(str, grid.kernel_sizes)),
                           "filter_counts": ",".join(map(str, grid.filter_counts)),
                           "dense_sizes": ",".join(map(str, grid.dense_sizes)),
                           "seeds": ",".join(map(str, grid.seeds)), **values})
    tcfg = build_training_config(values)
    series = load_series(args.data, args.meter)
    train_set, val_set = prepare(series, values["input_len"], values["horizon"],
                                 SplitSpec(values["val_fraction"]))
    result = run_scan(grid, tcfg, train_set, val_set, workers=args.workers)
    out = Path(args.out)
    render_report(result, out, timings=args.timings)
    (out / "timings.csv").write_text(timings_csv(result), encoding="utf-8")
    if result.failed_count:
        print(f"{result.failed_count} cell(s) FAILED and were excluded from the means")
    print(f"scanned {len(result.cells)} cell(s); report in {out}")
    return 0


def cmd_report(args) -> int:
    _print_config("report", {"cells": args.cells, "out": args.out})
    result = read_cells(args.cells)
    out = Path(args.out)
    same = out.resolve() == Path(args.cells).resolve().parent
    render_report(result, out, write_cells=not same)
    if result.failed_count:
        print(f"{result.failed_count} cell(s) FAILED and were excluded from the means")
    print(f"report for {len(result.cells)} cell(s) written to {out}")
    return 0


# -- parser ------------------------------------------------------------------

def _add_training_flags(p: argparse.ArgumentParser, with_seed: bool = True):
    g = p.add_argument_group("network and training (defaults: W=672 k=9 F=16 D=6, b=128, e=40)")
    g.add_argument("--config", help="key=value file with defaults; flags override it")
    g.add_argument("--mode", choices=["direct", "iterative"],
                   help="direct: h=144 outputs; iterative: h=1 network (default direct)")
    g.add_argument("--window", dest="input_len", type=int, help="input window W (default 672)")
    g.add_argument("--horizon", type=int, help="direct-mode horizon h (default 144)")
    g.add_argument("--batch-size", dest="batch_size", type=int, help="batch size (default 128)")
    g.add_argument("--epochs", type=int, help="epochs (default 40)")
    if with_seed:
        g.add_argument("--seed", type=int, help="training seed (default 0)")
    g.add_argument("--lr", type=float, help="Nadam learning rate (default 0.002)")
    g.add_argument("--beta1", type=float, help="Nadam beta1 (default 0.9)")
    g.add_argument("--beta2", type=float, help="Nadam beta2 (default 0.999)")
    g.add_argument("--eps", type=float, help="Nadam epsilon (default 1e-8)")
    g.add_argument("--schedule-decay", dest="schedule_decay", type=float,
                   help="Nadam momentum schedule decay (default 0.004)")
    g.add_argument("--val-fraction", dest="val_fraction", type=float,
                   help="fraction of windows held out for validation (default 0.2)")


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    """Append defaults only where they say something."""

    def _get_help_string(self, action):
        if action.default is None or action.default is False or "default" in (action.help or ""):
            return action.help
        return super()._get_help_string(action)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loadcnn", description="Train and evaluate 1D CNN load forecasters.",
                                     formatter_class=_HelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write synthetic household series as SIMPLE_CSV",
                       formatter_class=_HelpFormatter)
    p.add_argument("--households", type=int, default=40, help="number of households")
    p.add_argument("--days", type=int, default=120, help="days to simulate")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--start", type=_datetime, help="first slot start (default 2009-07-13T00:00Z)")
    p.add_argument("--aggregate-only", action="store_true", help="skip per-household files")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="select households and write their 15-min sum load",
                       formatter_class=_HelpFormatter)
    p.add_argument("--input", nargs="+", required=True, help="reading files")
    p.add_argument("--format", choices=[f.value for f in ReadingFormat], default="simple",
                   help="simple: meter_id,timestamp,kwh; code: meter_id,DDDSS,kwh")
    p.add_argument("--epoch", type=_date, default=DEFAULT_EPOCH, help="day zero of CODE_CSV codes")
    p.add_argument("--households", type=int, help="households to draw (default: all)")
    p.add_argument("--seed", type=int, default=0, help="household selection seed")
    p.add_argument("--gap-policy", choices=[g.value for g in GapPolicy], default="linear",
                   help="linear fills gaps of up to 4 slots; error rejects any gap")
    p.add_argument("--out", required=True, help="output SIMPLE_CSV file")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train a forecasting network")
    p.add_argument("--data", required=True, help="SIMPLE_CSV load series")
    p.add_argument("--meter", help="meter id to use if the file holds several")
    p.add_argument("--kernel-size", dest="kernel_size", type=int, help="kernel size k (default 9)")
    p.add_argument("--filters", dest="n_filters", type=int, help="number of filters F (default 16)")
    p.add_argument("--dense-size", dest="dense_size", type=int, help="hidden dense width D (default 6)")
    _add_training_flags(p)
    p.add_argument("--out", required=True, help="model file; .stats and .report.csv are written beside it")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("forecast", help="forecast from the end of a series",
                       formatter_class=_HelpFormatter)
    p.add_argument("--model", required=True, help="model file written by train")
    p.add_argument("--data", required=True, help="SIMPLE_CSV history; the last W slots are used")
    p.add_argument("--meter", help="meter id to use if the file holds several")
    p.add_argument("--mode", choices=["direct", "iterative"], help="default: the trained mode")
    p.add_argument("--steps", type=int, default=DIRECT_HORIZON, help="forecast length")
    p.add_argument("--out", required=True, help="output CSV timestamp,forecast_kwh")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("scan", help="kernel size x filters x dense size grid scan")
    p.add_argument("--grid", help="key=value file with kernel_sizes, filter_counts, dense_sizes, seeds")
    p.add_argument("--data", required=True, help="SIMPLE_CSV load series")
    p.add_argument("--meter", help="meter id to use if the file holds several")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes (default 1)")
    p.add_argument("--timings", action="store_true",
                   help="fill wall_time_s in cells.csv (makes it run-dependent)")
    _add_training_flags(p)
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("report", help="regenerate heatmaps and curves from cells.csv",
                       formatter_class=_HelpFormatter)
    p.add_argument("--cells", required=True, help="cells.csv from a scan")
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        code = EXIT_USAGE
        if isinstance(exc, LoadCnnError) and not isinstance(exc, ConfigError):
            code = EXIT_DATA
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    except NumericError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (LoadCnnError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

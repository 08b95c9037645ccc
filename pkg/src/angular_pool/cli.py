"""Command-line front end.

Subcommands: ``combine``, ``score``, ``backtest``, ``optimize``, ``verify``
and ``export-plot-data``.  Failures print one line of the form
``error[code]: message`` on stderr and exit with a nonzero status.
"""

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from .backtest import BacktestConfig, fit_origin, run_backtest
from .cdf import HUB_LEVELS, PiecewiseLinearCdf, cdf_from_quantiles, sup_distance
from .combine import CombinationSpec, angular_combine_exact, angular_combine_grid, combine, horizontal_combine
from .errors import AngularPoolError, ConfigError, InvalidInputError, ParseError
from .ingest import fixture_paths, parse_hub_csv
from .scoring import reliability_data, score_forecast
from .verify import SUITES, run_suites


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------------------
# input helpers


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", exc.lineno) from None


def _floor(text):
    return None if text is None or text.lower() == "none" else float(text)


def load_cdf(path, floor=None):
    """CDF from a JSON file holding ``knots`` or ``levels`` and ``quantiles``."""
    data = _read_json(path)
    if not isinstance(data, dict):
        raise InvalidInputError(f"{path}: expected a JSON object")
    if "knots" in data:
        return PiecewiseLinearCdf.from_dict(data)
    if "levels" in data and "quantiles" in data:
        return cdf_from_quantiles((data["levels"], data["quantiles"]), floor=floor)
    raise InvalidInputError(f"{path}: expected 'knots' or 'levels' and 'quantiles'")


def _load_hub(args):
    if args.fixture:
        forecasts, truth, _ = fixture_paths()
        return parse_hub_csv(forecasts, truth, floor=_floor(args.floor))
    if not args.forecasts or not args.truth:
        raise ConfigError("--forecasts and --truth are required (or use --fixture)")
    return parse_hub_csv(args.forecasts, args.truth, floor=_floor(args.floor))


def _load_config(args):
    if args.config:
        return BacktestConfig.from_json(args.config)
    if args.fixture:
        return BacktestConfig.from_json(fixture_paths()[2])
    return BacktestConfig()


def _parse_origin(text, data):
    for o in data.origins:
        if str(o) == text:
            return o
    raise InvalidInputError(f"origin {text} is not in the data")


def _cell_cdfs(args):
    """Member CDFs selected by ``--cell location,origin,horizon``."""
    data = _load_hub(args)
    parts = args.cell.split(",")
    if len(parts) != 3:
        raise ConfigError("--cell must be LOCATION,ORIGIN,HORIZON")
    series, origin, horizon = parts[0], _parse_origin(parts[1], data), int(parts[2])
    teams, cdfs = data.member_cdfs(series, origin, horizon)
    if not cdfs:
        raise InvalidInputError(f"no forecasts for cell {args.cell}")
    return cdfs


def _write(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _num(v):
    return "" if v is None else repr(float(v))


# ---------------------------------------------------------------------------
# commands


def cmd_combine(args):
    if args.direction == "angular" and args.theta is None:
        raise ConfigError("--theta is required with --direction angular")
    if args.direction != "angular" and args.theta is not None:
        raise ConfigError("--theta is only valid with --direction angular")
    if args.cell and args.inputs:
        raise ConfigError("give either CDF files or --cell, not both")
    if args.check_exact and args.direction != "angular":
        raise ConfigError("--check-exact needs --direction angular")
    weights = None
    if args.weights_file:
        raw = _read_json(args.weights_file)
        weights = raw["weights"] if isinstance(raw, dict) else raw
        if args.agg == "median":
            raise ConfigError("weights cannot be combined with --agg median")
    spec = CombinationSpec(
        direction=args.direction,
        theta_deg=args.theta,
        aggregator="weighted" if weights is not None else args.agg,
        weights=tuple(weights) if weights is not None else None,
        m=args.m,
        route=args.route,
    )
    cdfs = _cell_cdfs(args) if args.cell else [load_cdf(p, _floor(args.floor)) for p in args.inputs]
    if not cdfs:
        raise ConfigError("no input CDFs given")
    result = combine(cdfs, spec)
    _write(result.to_json() + "\n", args.out)
    if args.check_exact:
        if args.theta == 0:
            exact, grid = horizontal_combine(cdfs, weights), angular_combine_grid(cdfs, 0, weights, m=args.m)
        else:
            exact = angular_combine_exact(cdfs, args.theta, weights)
            grid = angular_combine_grid(cdfs, args.theta, weights, m=args.m)
        print(f"sup-norm gap between grid and exact routes: {sup_distance(exact, grid):.6e}", file=sys.stderr)
    return 0


def cmd_score(args):
    if len(args.obs) != len(args.inputs):
        raise ConfigError(f"got {len(args.obs)} observation(s) for {len(args.inputs)} CDF file(s)")
    rows = []
    for path, x in zip(args.inputs, args.obs):
        F = load_cdf(path, _floor(args.floor))
        for metric, value in score_forecast(F, x).items():
            rows.append([path, metric, _num(value)])
    _write(_csv_text(["input", "metric", "value"], rows), args.out)
    return 0


def cmd_backtest(args):
    data = _load_hub(args)
    cfg = _load_config(args)
    errs = cfg.errors(len(data.origins))
    if errs:
        raise ConfigError("; ".join(errs))
    report = run_backtest(data, cfg)
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "report.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(report.to_csv())
    manifest = report.manifest(cfg)
    manifest["dropped_forecasts"] = dict(sorted(data.stats.items()))
    with open(os.path.join(args.out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {args.out_dir}/report.csv and {args.out_dir}/manifest.json")
    return 0


def cmd_optimize(args):
    data = _load_hub(args)
    cfg = _load_config(args)
    errs = cfg.errors()
    if errs:
        raise ConfigError("; ".join(errs))
    origin = _parse_origin(args.origin, data)
    methods = args.method or cfg.all_methods
    series = args.series or data.series
    out = []
    for s in series:
        weights, params = fit_origin(data, cfg, s, origin, methods)
        out.append({"series": s, "origin": str(origin), "weights": weights, "params": params})
    _write(json.dumps(out, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def cmd_verify(args):
    failed = False
    for result in run_suites(args.suite, args.trials, args.seed, k=args.k):
        print(result.line())
        failed |= not result.passed
    return 1 if failed else 0


def _x_grid(F, args):
    lo = F.x[0] if args.x_min is None else args.x_min
    hi = F.x[-1] if args.x_max is None else args.x_max
    if not hi > lo:
        raise ConfigError("--x-max must exceed --x-min")
    if args.points < 2:
        raise ConfigError("--points must be at least 2")
    return np.linspace(lo, hi, args.points)


def _export_cdf(args):
    if len(args.inputs) != 1:
        raise ConfigError("cdf export takes exactly one CDF file")
    F = load_cdf(args.inputs[0], _floor(args.floor))
    xs = _x_grid(F, args)
    return _csv_text(["x", "cdf"], [[_num(x), _num(F.cdf(x))] for x in xs])


def _export_pdf(args):
    if len(args.inputs) != 1:
        raise ConfigError("pdf export takes exactly one CDF file")
    F = load_cdf(args.inputs[0], _floor(args.floor))
    xs = _x_grid(F, args)
    h = args.h if args.h is not None else 0.5 * (xs[1] - xs[0])
    if not h > 0:
        raise ConfigError("--h must be positive")
    jumps = F.x[1:][np.diff(F.x) == 0]
    rows = []
    for x in xs:
        if np.any((jumps >= x - h) & (jumps <= x + h)):
            rows.append([_num(x), "", "undefined: jump within the difference stencil"])
        else:
            rows.append([_num(x), _num((F.cdf(x + h) - F.cdf(x - h)) / (2 * h)), ""])
    return _csv_text(["x", "density", "note"], rows)


def _export_reliability(args):
    data = _load_hub(args)
    pairs = []
    for (s, o, h, team) in sorted(data.forecasts):
        if args.team and team != args.team:
            continue
        x = data.observation(s, o, h)
        F = data.cdf(s, o, h, team)
        if x is not None and F is not None:
            pairs.append((F, x))
    if not pairs:
        raise InvalidInputError("no forecast has a recorded outcome")
    rows = [[_num(a), _num(f)] for a, f in reliability_data(pairs, HUB_LEVELS)]
    return _csv_text(["level", "fraction"], rows)


def _export_theta_sweep(args):
    thetas = list(range(91))
    if args.forecasts or args.fixture:
        data = _load_hub(args)
        cfg = _load_config(args)
        methods = tuple(f"angular_avg@{t}" for t in thetas)
        cfg = BacktestConfig(**{**cfg.__dict__, "methods": methods, "benchmark": "angular_avg@0"})
        report = run_backtest(data, cfg)
        rows = [[t, _num(report.value(f"angular_avg@{t}", "all", "mqs")), _num(report.value(f"angular_avg@{t}", "all", "skill_mqs"))] for t in thetas]
        return _csv_text(["theta", "mqs", "skill_mqs"], rows)
    cdfs = [load_cdf(p, _floor(args.floor)) for p in args.inputs]
    if not cdfs:
        raise ConfigError("theta-sweep needs CDF files or --forecasts/--truth")
    rows = []
    for t in thetas:
        F = horizontal_combine(cdfs) if t == 0 else angular_combine_exact(cdfs, t)
        row = [t, _num(F.mean), _num(F.variance)]
        if args.obs is not None:
            row.append(_num(score_forecast(F, args.obs)["mqs"]))
        rows.append(row)
    header = ["theta", "mean", "variance"] + (["mqs"] if args.obs is not None else [])
    return _csv_text(header, rows)


def cmd_export_plot_data(args):
    handler = {
        "cdf": _export_cdf,
        "pdf": _export_pdf,
        "reliability": _export_reliability,
        "theta-sweep": _export_theta_sweep,
    }[args.what]
    _write(handler(args), args.out)
    return 0


# ---------------------------------------------------------------------------
# parser


def _hub_args(p):
    p.add_argument("--forecasts", nargs="+", help="forecast CSV file(s)")
    p.add_argument("--truth", help="truth CSV file")
    p.add_argument("--fixture", action="store_true", help="use the bundled synthetic fixture")
    p.add_argument("--floor", default="0", help="lower bound for the CDF tails, or 'none' (default 0)")


def build_parser():
    parser = _Parser(prog="angular-pool", description="Pool probability-distribution forecasts.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("combine", help="combine CDFs into one")
    p.add_argument("inputs", nargs="*", help="CDF JSON files")
    p.add_argument("--cell", help="LOCATION,ORIGIN,HORIZON of a forecast CSV cell")
    p.add_argument("--direction", choices=("horizontal", "vertical", "angular"), default="horizontal")
    p.add_argument("--theta", type=float, help="angle in degrees for --direction angular")
    p.add_argument("--agg", choices=("mean", "median"), default="mean")
    p.add_argument("--weights-file", help="JSON list of weights, or an object with a 'weights' list")
    p.add_argument("--m", type=int, default=1001, help="number of lines on the grid route (default 1001)")
    p.add_argument("--route", choices=("exact", "grid"), help="angular algorithm")
    p.add_argument("--check-exact", action="store_true", help="report the gap between grid and exact routes")
    p.add_argument("--out", help="output JSON file (default stdout)")
    _hub_args(p)
    p.set_defaults(func=cmd_combine, floor="none")

    p = sub.add_parser("score", help="score CDFs against observations")
    p.add_argument("inputs", nargs="+", help="CDF JSON files")
    p.add_argument("--obs", type=float, nargs="+", required=True, help="one observation per file")
    p.add_argument("--floor", default="none")
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("backtest", help="expanding-window backtest")
    _hub_args(p)
    p.add_argument("--config", help="backtest config JSON")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("optimize", help="fit method parameters at one origin")
    _hub_args(p)
    p.add_argument("--config")
    p.add_argument("--origin", required=True, help="forecast origin (YYYY-MM-DD)")
    p.add_argument("--series", nargs="+")
    p.add_argument("--method", nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("verify", help="randomized property checks")
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, help="fixed member count for the median suite")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export-plot-data", help="write CSV points for plotting")
    p.add_argument("--what", choices=("cdf", "pdf", "reliability", "theta-sweep"), required=True)
    p.add_argument("inputs", nargs="*", help="CDF JSON files")
    _hub_args(p)
    p.add_argument("--config")
    p.add_argument("--team", help="restrict reliability to one team")
    p.add_argument("--obs", type=float, help="observation for the theta-sweep MQS column")
    p.add_argument("--x-min", type=float)
    p.add_argument("--x-max", type=float)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--h", type=float, help="finite-difference half step for pdf export")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_plot_data)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.command == "verify" and args.trials < 1:
            raise ConfigError("--trials must be positive")
        return args.func(args)
    except AngularPoolError as exc:
        print(f"error[{exc.code}]: {exc}".replace("\n", " "), file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error[io]: {exc}".replace("\n", " "), file=sys.stderr)
        return 2
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error[invalid-input]: {exc}".replace("\n", " "), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""
Expanding-window backtest on the bundled fixture
================================================

Three synthetic series with three forecasters: a sharp one, a biased one
and a dispersed one.  Angles and weights are refit at every origin from
outcomes already known there.
"""

from angular_pool import BacktestConfig, parse_hub_csv, run_backtest
from angular_pool.ingest import fixture_paths

forecasts, truth, config = fixture_paths()
data = parse_hub_csv(forecasts, truth, floor=None)
print(len(data.series), "series,", len(data.origins), "origins, horizons", data.horizons)

cfg = BacktestConfig.from_json(config)
cfg = BacktestConfig(**{**cfg.__dict__, "methods": ("horizontal_avg", "vertical_avg", "angular_avg", "angular_wtd")})
report = run_backtest(data, cfg)

print(f"{'method':16s} {'MQS':>8s} {'skill %':>8s}  cov95")
for method in report.methods:
    print(
        f"{method:16s} {report.value(method, 'all', 'mqs'):8.3f} "
        f"{report.value(method, 'all', 'skill_mqs'):+8.2f}  {report.value(method, 'all', 'coverage_95'):.2f}"
    )

# angles chosen at each origin for the first series
for (series, origin, method), params in sorted(report.fitted.items()):
    if series == "S1" and method == "angular_avg":
        print(origin, "theta =", params["theta"], "weights", {t: round(w, 3) for t, w in report.weights[(series, origin)].items()})

"""Expanding-window evaluation of combining methods.

At every out-of-sample origin, method parameters (angles, weights, trimming
fractions and so on) are fitted on cells whose outcome was already known at
that origin.  The fitted methods then combine the current forecasts, which
are scored against the realized values.
"""

import csv
import io
import json
import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .cdf import HUB_LEVELS, QuantileForecast
from .combine import (
    BetaPoolParams,
    RecalibrationParams,
    beta_pool,
    hv_switch,
    recalibrate,
    secondary_combine,
    trim_indices,
    vertical_combine,
)
from .errors import ConfigError, DegenerateSupportError, InvalidInputError
from .estimation import (
    THETA_GRID,
    HistoryCase,
    case_pool,
    estimate_weights,
    in_sample_mqs,
    n_workers,
    optimize_beta,
    optimize_scalar,
    optimize_theta,
)
from .scoring import METRICS, mqs, score_forecast, skill_score

logger = logging.getLogger(__name__)

#: Metrics that also get a skill score against the benchmark.
SKILL_METRICS = ("mqs", "interval_score_95", "interval_score_50", "crps")


@dataclass
class ForecastDataset:
    """A panel of quantile forecasts with the realized values.

    Parameters
    ----------
    forecasts : dict
        ``(series, origin, horizon, team) -> QuantileForecast``.  Team sets
        may differ from cell to cell.
    truth : dict
        ``(series, date) -> value``.
    targets : dict
        ``(series, origin, horizon) -> date`` of the forecast target.
    groups : dict, optional
        ``series -> label`` used for grouped summaries.
    floor : float or None
        Lower bound passed to the CDF construction (0 for counts, None for
        unbounded synthetic data).
    stats : dict, optional
        Counts of forecasts dropped while reading the data, by reason.
    """

    forecasts: dict
    truth: dict
    targets: dict
    groups: dict = field(default_factory=dict)
    floor: float = 0.0
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        for key, qf in self.forecasts.items():
            if len(key) != 4:
                raise InvalidInputError(f"forecast key {key!r} is not (series, origin, horizon, team)")
            if not isinstance(qf, QuantileForecast):
                raise InvalidInputError(f"forecast {key!r} is not a QuantileForecast")
            if key[:3] not in self.targets:
                raise InvalidInputError(f"no target date for cell {key[:3]!r}")
        self._cdfs = {}
        self._index = {}
        for s, o, h, team in sorted(self.forecasts):
            self._index.setdefault((s, o, h), []).append(team)

    @property
    def series(self):
        return sorted({k[0] for k in self.targets})

    @property
    def origins(self):
        return sorted({k[1] for k in self.targets})

    @property
    def horizons(self):
        return sorted({k[2] for k in self.targets})

    def teams(self, series, origin, horizon):
        """Sorted teams that submitted for a cell."""
        return list(self._index.get((series, origin, horizon), []))

    def observation(self, series, origin, horizon):
        """Realized value for a cell, or None when it is not recorded."""
        target = self.targets.get((series, origin, horizon))
        return self.truth.get((series, target))

    def cdf(self, series, origin, horizon, team):
        """Piecewise-linear CDF of one forecast, or None if its support is degenerate."""
        key = (series, origin, horizon, team)
        if key not in self._cdfs:
            try:
                self._cdfs[key] = self.forecasts[key].to_cdf(self.floor)
            except DegenerateSupportError:
                logger.warning("dropping degenerate forecast %r", key)
                self._cdfs[key] = None
        return self._cdfs[key]

    def member_cdfs(self, series, origin, horizon):
        """``(teams, cdfs)`` of the usable forecasts in a cell."""
        teams, cdfs = [], []
        for team in self.teams(series, origin, horizon):
            F = self.cdf(series, origin, horizon, team)
            if F is not None:
                teams.append(team)
                cdfs.append(F)
        return teams, cdfs

    def replace(self, **changes):
        """Copy with some fields swapped out."""
        kw = dict(forecasts=self.forecasts, truth=self.truth, targets=self.targets, groups=self.groups, floor=self.floor, stats=self.stats)
        kw.update(changes)
        return ForecastDataset(**kw)


def _grid(values, name, lo=-math.inf, hi=math.inf):
    vals = tuple(float(v) for v in values)
    if not vals:
        return [f"{name} must be nonempty"]
    if any(not (lo <= v <= hi) for v in vals):
        return [f"{name} values must lie in [{lo}, {hi}]"]
    return []


@dataclass
class BacktestConfig:
    """Settings of an expanding-window backtest.

    Method names are listed in :func:`available_methods`; angular methods
    with a fixed angle are written ``angular_avg@45``.
    """

    initial_in_sample: int = 10
    methods: tuple = (
        "horizontal_avg",
        "vertical_avg",
        "angular_avg",
        "hv_switch_avg",
        "horizontal_wtd",
        "vertical_wtd",
        "angular_wtd",
        "hv_switch_wtd",
    )
    benchmark: str = "horizontal_avg"
    levels: tuple = tuple(HUB_LEVELS.tolist())
    min_periods: int = 5
    theta_grid: tuple = THETA_GRID
    trim_grid: tuple = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    gamma_grid: tuple = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.25, 1.5, 1.75, 2.0)
    beta_grid: tuple = (0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 3.0)
    secondary_grid: tuple = tuple(i / 10 for i in range(11))
    groups: dict = field(default_factory=dict)

    def errors(self, n_origins=None):
        """Every validation failure, as a list of messages."""
        out = []
        if not isinstance(self.initial_in_sample, int) or self.initial_in_sample < 1:
            out.append("initial_in_sample must be an integer >= 1")
        elif n_origins is not None and self.initial_in_sample >= n_origins:
            out.append(f"initial_in_sample ({self.initial_in_sample}) must be less than the number of origins ({n_origins})")
        if not self.methods:
            out.append("methods must be nonempty")
        for name in self.methods:
            try:
                parse_method(name)
            except ConfigError as exc:
                out.append(str(exc))
        try:
            parse_method(self.benchmark)
        except ConfigError as exc:
            out.append(f"benchmark: {exc}")
        lv = np.asarray(self.levels, dtype=float)
        if lv.size == 0 or np.any((lv <= 0) | (lv >= 1)) or np.any(np.diff(lv) <= 0):
            out.append("levels must be strictly increasing inside (0, 1)")
        if not isinstance(self.min_periods, int) or self.min_periods < 0:
            out.append("min_periods must be a nonnegative integer")
        out += _grid(self.theta_grid, "theta_grid", 0, 90)
        out += _grid(self.trim_grid, "trim_grid", 0, 0.999999)
        out += _grid(self.gamma_grid, "gamma_grid", 1e-12)
        out += _grid(self.beta_grid, "beta_grid", 1e-12)
        out += _grid(self.secondary_grid, "secondary_grid", 0, 1)
        if not isinstance(self.groups, dict):
            out.append("groups must map series to labels")
        return out

    def validate(self, n_origins=None):
        errs = self.errors(n_origins)
        if errs:
            raise ConfigError("; ".join(errs))
        return self

    @property
    def all_methods(self):
        """Configured methods with the benchmark appended if absent."""
        ms = list(dict.fromkeys(self.methods))
        if self.benchmark not in ms:
            ms.append(self.benchmark)
        return ms

    def to_dict(self):
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, data):
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        return cls(**kw)

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)


# ---------------------------------------------------------------------------
# method registry

_DIRS = {"horizontal", "vertical", "angular"}
_VARIANTS = {"avg": False, "wtd": True}


@dataclass(frozen=True)
class MethodSpec:
    """Parsed method name."""

    kind: str
    direction: str = None
    weighted: bool = False
    theta: float = None
    trim: str = None


def parse_method(name):
    """Parse a method name into a :class:`MethodSpec`.

    Recognized forms: ``{horizontal,vertical,angular}_{avg,wtd}``,
    ``angular_{avg,wtd}@THETA``, ``hv_switch_{avg,wtd}``, ``median``,
    ``beta_{avg,wtd}``, ``trim_{ext,int}_{horizontal,vertical,angular}``,
    ``recal_{direction}_{avg,wtd}`` and ``secondary_{horizontal,vertical}_{avg,wtd}``.
    """
    if not isinstance(name, str):
        raise ConfigError(f"method name must be a string, got {name!r}")
    if name == "median":
        return MethodSpec("median")
    base, _, at = name.partition("@")
    parts = base.split("_")
    try:
        if at:
            theta = float(at)
            if parts[0] != "angular" or len(parts) != 2 or not 0 <= theta <= 90:
                raise ValueError
            return MethodSpec("pool", "angular", _VARIANTS[parts[1]], theta)
        if len(parts) == 2 and parts[0] in _DIRS:
            return MethodSpec("pool", parts[0], _VARIANTS[parts[1]])
        if len(parts) == 3 and parts[:2] == ["hv", "switch"]:
            return MethodSpec("switch", weighted=_VARIANTS[parts[2]])
        if len(parts) == 2 and parts[0] == "beta":
            return MethodSpec("beta", "vertical", _VARIANTS[parts[1]])
        if len(parts) == 3 and parts[0] == "trim" and parts[1] in ("ext", "int") and parts[2] in _DIRS:
            kind = "exterior" if parts[1] == "ext" else "interior"
            return MethodSpec("trim", parts[2], trim=kind)
        if len(parts) == 3 and parts[0] == "recal" and parts[1] in _DIRS:
            return MethodSpec("recal", parts[1], _VARIANTS[parts[2]])
        if len(parts) == 3 and parts[0] == "secondary" and parts[1] in ("horizontal", "vertical"):
            return MethodSpec("secondary", parts[1], _VARIANTS[parts[2]])
    except (KeyError, ValueError):
        pass
    raise ConfigError(f"unknown method {name!r}")


def available_methods():
    """Every method name without a fixed angle."""
    names = [f"{d}_{v}" for v in _VARIANTS for d in ("horizontal", "vertical", "angular")]
    names += [f"hv_switch_{v}" for v in _VARIANTS] + ["median"] + [f"beta_{v}" for v in _VARIANTS]
    names += [f"trim_{t}_{d}" for t in ("ext", "int") for d in ("horizontal", "vertical", "angular")]
    names += [f"recal_{d}_{v}" for d in ("horizontal", "vertical", "angular") for v in _VARIANTS]
    names += [f"secondary_{d}_{v}" for d in ("horizontal", "vertical") for v in _VARIANTS]
    return names


def _trimmed_case(case, kind, fraction):
    """Sub-case with the kept members; all members if trimming would keep none."""
    key = ("trim", kind, fraction)
    if key not in case.cache:
        try:
            idx = trim_indices([F.mean for F in case.cdfs], kind, fraction)
        except Exception:
            idx = list(range(len(case.cdfs)))
        if len(idx) == len(case.cdfs):
            case.cache[key] = case
        else:
            case.cache[key] = HistoryCase([case.cdfs[i] for i in idx], case.observation)
    return case.cache[key]


class _Fitter:
    """Fits methods on one in-sample history, sharing intermediate results."""

    def __init__(self, history, cfg):
        self.history = history
        self.cfg = cfg
        self.levels = np.asarray(cfg.levels, dtype=float)
        self.memo = {}

    def fit(self, name):
        if name not in self.memo:
            self.memo[name] = self._fit(parse_method(name))
        return self.memo[name]

    def theta(self, weighted):
        return self.fit(f"angular_{'wtd' if weighted else 'avg'}")["theta"]

    def _pool_params(self, direction, weighted):
        if direction == "angular":
            return {"theta": self.theta(weighted)}
        return {}

    def _fit(self, spec):
        h, cfg = self.history, self.cfg
        if spec.kind == "pool":
            if spec.direction != "angular":
                return {}
            if spec.theta is not None:
                return {"theta": spec.theta}
            return {"theta": float(optimize_theta(h, spec.weighted, cfg.theta_grid, self.levels))}
        if spec.kind == "median":
            return {}
        if spec.kind == "switch":
            return {
                "mqs_h": in_sample_mqs(h, lambda c: case_pool(c, "horizontal", weighted=spec.weighted), self.levels),
                "mqs_v": in_sample_mqs(h, lambda c: case_pool(c, "vertical", weighted=spec.weighted), self.levels),
            }
        if spec.kind == "beta":
            g = cfg.beta_grid
            p = optimize_beta(h, g, g, spec.weighted, self.levels)
            return {"a": p.a, "b": p.b}
        if spec.kind == "trim":
            base = self._pool_params(spec.direction, False)
            theta = base.get("theta")

            def build(case, f):
                return case_pool(_trimmed_case(case, spec.trim, f), spec.direction, theta)

            return dict(base, fraction=float(optimize_scalar(h, build, cfg.trim_grid, self.levels)))
        if spec.kind == "recal":
            base = self._pool_params(spec.direction, spec.weighted)
            theta = base.get("theta")

            def build(case, g):
                return recalibrate(case_pool(case, spec.direction, theta, spec.weighted), RecalibrationParams(g))

            return dict(base, gamma=float(optimize_scalar(h, build, cfg.gamma_grid, self.levels)))
        if spec.kind == "secondary":

            def build(case, w):
                key = ("secondary", spec.direction, spec.weighted, w)
                if key not in case.cache:
                    ch = case_pool(case, "horizontal", weighted=spec.weighted)
                    cv = case_pool(case, "vertical", weighted=spec.weighted)
                    case.cache[key] = secondary_combine(ch, cv, w, spec.direction)
                return case.cache[key]

            return {"w": float(optimize_scalar(h, build, cfg.secondary_grid, self.levels))}
        raise ConfigError(f"unhandled method kind {spec.kind!r}")


def build_method(name, case, params):
    """Combine the members of ``case`` with a fitted method."""
    spec = parse_method(name)
    if spec.kind == "pool":
        return case_pool(case, spec.direction, params.get("theta"), spec.weighted)
    if spec.kind == "median":
        return vertical_combine(case.cdfs, agg="median")
    w = case.weights if spec.weighted else None
    if spec.kind == "switch":
        return hv_switch(case.cdfs, params["mqs_h"], params["mqs_v"], w)
    if spec.kind == "beta":
        return beta_pool(case.cdfs, w, BetaPoolParams(params["a"], params["b"]))
    if spec.kind == "trim":
        return case_pool(_trimmed_case(case, spec.trim, params["fraction"]), spec.direction, params.get("theta"))
    if spec.kind == "recal":
        base = case_pool(case, spec.direction, params.get("theta"), spec.weighted)
        return recalibrate(base, RecalibrationParams(params["gamma"]))
    if spec.kind == "secondary":
        ch = case_pool(case, "horizontal", weighted=spec.weighted)
        cv = case_pool(case, "vertical", weighted=spec.weighted)
        return secondary_combine(ch, cv, params["w"], spec.direction)
    raise ConfigError(f"unhandled method kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# report


@dataclass
class ScoreReport:
    """Scores of a backtest at cell, series and group level.

    Attributes
    ----------
    cells : list of dict
        One entry per scored (series, origin, horizon, method).
    series_scores : dict
        ``(method, series) -> {metric: value}``, averaged over horizons
        within each origin and then over origins.
    fitted : dict
        ``(series, origin, method) -> params`` fitted at each origin.
    skipped : collections.Counter
        Cells dropped, by reason.
    rows : list of tuple
        ``(method, group, metric, value)`` summary rows.
    """

    methods: list
    benchmark: str
    cells: list = field(default_factory=list)
    series_scores: dict = field(default_factory=dict)
    fitted: dict = field(default_factory=dict)
    skipped: Counter = field(default_factory=Counter)
    weights: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)

    @property
    def series(self):
        return sorted({s for _, s in self.series_scores})

    def value(self, method, group, metric):
        for m, g, k, v in self.rows:
            if (m, g, k) == (method, group, metric):
                return v
        raise KeyError((method, group, metric))

    def to_csv(self):
        """Summary rows as CSV text with columns method, group, metric, value."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "group", "metric", "value"])
        for m, g, k, v in self.rows:
            w.writerow([m, g, k, repr(float(v))])
        return buf.getvalue()

    def manifest(self, cfg):
        """Reproducibility record: the configuration plus skip counts."""
        return {
            "config": cfg.to_dict(),
            "methods": list(self.methods),
            "benchmark": self.benchmark,
            "series": [str(s) for s in self.series],
            "n_scored_cells": len({(c["series"], c["origin"], c["horizon"]) for c in self.cells}),
            "skipped": dict(sorted(self.skipped.items())),
        }


def group_summary(report, grouping=None, labels=None):
    """Per-group mean scores and skill scores.

    Scores are averaged over the series of a group.  Skill scores use the
    geometric mean of the per-series ratios to the benchmark.  The group
    ``"all"`` covers every series.

    Parameters
    ----------
    report : ScoreReport
    grouping : dict, optional
        ``series -> label``.
    labels : sequence, optional
        Restrict to these labels; an unknown label raises an error.
    """
    grouping = dict(grouping or {})
    series = report.series
    groups = {"all": series}
    for lab in sorted({str(v) for v in grouping.values()}):
        groups[lab] = [s for s in series if str(grouping.get(s)) == lab]
    if labels is not None:
        missing = [lab for lab in labels if lab not in groups]
        if missing:
            raise InvalidInputError(f"unknown group label(s): {', '.join(map(str, missing))}")
        groups = {lab: groups[lab] for lab in labels}
    rows = []
    for method in report.methods:
        for lab, members in groups.items():
            members = [s for s in members if (method, s) in report.series_scores]
            if not members:
                continue
            for metric in METRICS:
                vals = [report.series_scores[(method, s)][metric] for s in members]
                rows.append((method, lab, metric, float(np.mean(vals))))
            for metric in SKILL_METRICS:
                ms = [report.series_scores[(method, s)][metric] for s in members]
                bs = [report.series_scores[(report.benchmark, s)][metric] for s in members]
                rows.append((method, lab, f"skill_{metric}", skill_score(ms, bs)))
    return rows


# ---------------------------------------------------------------------------
# driver


def _in_sample_cells(data, series, origin):
    """(origin, horizon) cells of ``series`` whose outcome is known at ``origin``."""
    out = []
    for o in data.origins:
        if not o < origin:
            break
        for h in data.horizons:
            target = data.targets.get((series, o, h))
            if target is None or target > origin or data.observation(series, o, h) is None:
                continue
            out.append((o, h))
    return out


def _team_records(data, series, cells, cases):
    """Team -> per-origin mean MQS over the in-sample cells."""
    per_origin = {}
    for o, h in cells:
        case = cases[(o, h)]
        for team, F in zip(case.teams, case.cdfs):
            key = ("member_mqs", team)
            if key not in case.cache:
                case.cache[key] = mqs(F, case.observation)
            per_origin.setdefault(team, {}).setdefault(o, []).append(case.cache[key])
    return {team: [float(np.mean(v)) for _, v in sorted(d.items())] for team, d in sorted(per_origin.items())}


class _SeriesState:
    """Cases of one series, built once and reused across origins."""

    def __init__(self, data, cfg, series):
        self.data = data
        self.cfg = cfg
        self.series = series
        self.cases = {}

    def case(self, o, h):
        """History case of a cell, or None when no forecast is usable."""
        if (o, h) not in self.cases:
            teams, cdfs = self.data.member_cdfs(self.series, o, h)
            obs = self.data.observation(self.series, o, h)
            self.cases[(o, h)] = HistoryCase(cdfs, obs, teams=tuple(teams), origin=o, horizon=h) if cdfs else None
        return self.cases[(o, h)]

    def history(self, origin):
        """In-sample cells at ``origin`` that have a usable case."""
        return [c for c in _in_sample_cells(self.data, self.series, origin) if self.case(*c) is not None]

    def fit(self, origin, methods, extra=()):
        """Estimate weights and fit ``methods`` on data known at ``origin``.

        ``extra`` lists further cells (the current ones) whose weights
        should be set as well.  Returns ``(weights, {method: params})``.
        """
        in_cells = self.history(origin)
        if not in_cells:
            raise InvalidInputError(f"no in-sample data for series {self.series} at origin {origin}")
        records = _team_records(self.data, self.series, in_cells, self.cases)
        teams = set(records)
        for key in extra:
            teams.update(self.cases[key].teams)
        full = {tm: records.get(tm, []) for tm in sorted(teams)}
        weights = estimate_weights(full, self.cfg.min_periods)
        for key in list(in_cells) + list(extra):
            case = self.cases[key]
            w = np.array([weights[tm] for tm in case.teams])
            case.weights = w / w.sum()
        fitter = _Fitter([self.cases[k] for k in in_cells], self.cfg)
        return weights, {name: fitter.fit(name) for name in methods}


def fit_origin(data, cfg, series, origin, methods=None):
    """Team weights and method parameters fitted at one origin.

    Only cells whose outcome was known at ``origin`` are used.
    """
    cfg = cfg or BacktestConfig()
    state = _SeriesState(data, cfg, series)
    return state.fit(origin, methods or cfg.all_methods)


def _run_series(data, cfg, series):
    methods = cfg.all_methods
    levels = np.asarray(cfg.levels, dtype=float)
    state = _SeriesState(data, cfg, series)
    skipped = Counter()
    cells, fitted, weights_log = [], {}, {}

    for t in data.origins[cfg.initial_in_sample:]:
        current = []
        for h in data.horizons:
            if (series, t, h) not in data.targets:
                continue
            if data.observation(series, t, h) is None:
                skipped["missing_truth"] += 1
            elif state.case(t, h) is None:
                skipped["no_teams"] += 1
            else:
                current.append(h)
        if not current:
            continue
        if not state.history(t):
            skipped["no_history"] += len(current)
            continue
        weights, params = state.fit(t, methods, extra=[(t, h) for h in current])
        weights_log[(series, t)] = weights
        for name in methods:
            fitted[(series, t, name)] = params[name]
        for h in current:
            case = state.case(t, h)
            for name in methods:
                F = build_method(name, case, params[name])
                scores = score_forecast(F, case.observation, levels)
                cells.append(dict(series=series, origin=t, horizon=h, method=name, **scores))
    return cells, fitted, skipped, weights_log


def _series_scores(cells, methods):
    """Average over horizons within each origin, then over origins."""
    by_origin = {}
    for c in cells:
        by_origin.setdefault((c["method"], c["series"], c["origin"]), []).append(c)
    by_series = {}
    for (m, s, _o), group in sorted(by_origin.items(), key=lambda kv: (kv[0][0], str(kv[0][1]), str(kv[0][2]))):
        by_series.setdefault((m, s), []).append({k: float(np.mean([g[k] for g in group])) for k in METRICS})
    return {key: {k: float(np.mean([r[k] for r in rs])) for k in METRICS} for key, rs in by_series.items()}


def run_backtest(data, cfg=None):
    """Expanding-window backtest of ``cfg.methods`` on ``data``.

    Series are independent and may be evaluated concurrently (see
    ``ANGULAR_POOL_THREADS``); results are merged in series order, so the
    report does not depend on the worker count.
    """
    cfg = (cfg or BacktestConfig()).validate(len(data.origins))
    series = data.series
    workers = min(n_workers(), max(1, len(series)))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda s: _run_series(data, cfg, s), series))
    else:
        results = [_run_series(data, cfg, s) for s in series]
    report = ScoreReport(methods=cfg.all_methods, benchmark=cfg.benchmark)
    for cells, fitted, skipped, weights in results:
        report.cells.extend(cells)
        report.fitted.update(fitted)
        report.skipped.update(skipped)
        report.weights.update(weights)
    for reason, n in sorted(report.skipped.items()):
        logger.info("skipped %d cell(s): %s", n, reason)
    report.series_scores = _series_scores(report.cells, report.methods)
    grouping = cfg.groups or data.groups
    report.rows = group_summary(report, grouping)
    return report

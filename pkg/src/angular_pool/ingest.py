"""Reading forecast-hub style CSV files and generating synthetic panels."""

import csv
import datetime as dt
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .backtest import ForecastDataset
from .cdf import HUB_LEVELS, QuantileForecast
from .errors import InvalidInputError, ParseError

logger = logging.getLogger(__name__)

FORECAST_COLUMNS = ("forecast_date", "target", "target_end_date", "location", "type", "quantile", "value")
TRUTH_COLUMNS = ("date", "location", "value")
TEAM_COLUMNS = ("model", "team")
LEVEL_TOL = 1e-9

_TARGET_RE = re.compile(r"^\s*(\d+)\s+wk\s+ahead\b", re.IGNORECASE)


def _date(text, line, what):
    try:
        return dt.date.fromisoformat(text.strip())
    except (ValueError, AttributeError):
        raise ParseError(f"bad {what} {text!r} (expected YYYY-MM-DD)", line) from None


def _number(text, line, what):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ParseError(f"bad {what} {text!r}", line) from None
    if not math.isfinite(value):
        raise ParseError(f"{what} must be finite", line)
    return value


def _reader(fh, required, path):
    reader = csv.DictReader(fh)
    header = reader.fieldnames or []
    missing = [c for c in required if c not in header]
    if missing:
        raise ParseError(f"{path}: missing column(s) {', '.join(missing)}", 1)
    return reader


def _match_level(q, levels):
    i = int(np.argmin(np.abs(levels - q)))
    return i if abs(levels[i] - q) <= LEVEL_TOL else None


def parse_truth_csv(path):
    """Read ``date,location,value`` rows into ``{(location, date): value}``."""
    truth = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = _reader(fh, TRUTH_COLUMNS, path)
        for row in reader:
            line = reader.line_num
            key = (row["location"].strip(), _date(row["date"], line, "date"))
            if key in truth:
                raise ParseError(f"duplicate truth for location {key[0]} on {key[1]}", line)
            truth[key] = _number(row["value"], line, "value")
    return truth


def parse_hub_csv(forecast_files, truth_file, levels=HUB_LEVELS, floor=0.0, groups=None):
    """Parse forecast and truth CSV files into a :class:`ForecastDataset`.

    Parameters
    ----------
    forecast_files : path or list of paths
        Files with columns ``forecast_date, target, target_end_date,
        location, type, quantile, value``.  The team comes from a ``model``
        or ``team`` column if present, otherwise from the file name stem.
    truth_file : path
        File with columns ``date, location, value``.
    levels : array_like
        Probability levels every forecast must supply.  Quantile values are
        matched to them within ``1e-9``.
    floor : float or None
        Lower bound for the CDF construction.

    Returns
    -------
    ForecastDataset
        ``stats`` counts dropped forecasts by reason.

    Raises
    ------
    ParseError
        On a malformed row, with its line number.
    """
    if isinstance(forecast_files, (str, Path)):
        forecast_files = [forecast_files]
    levels = np.asarray(levels, dtype=float)
    raw = {}
    targets = {}
    for path in forecast_files:
        path = Path(path)
        with open(path, newline="", encoding="utf-8") as fh:
            reader = _reader(fh, FORECAST_COLUMNS, path)
            team_col = next((c for c in TEAM_COLUMNS if c in (reader.fieldnames or [])), None)
            for row in reader:
                line = reader.line_num
                kind = (row["type"] or "").strip()
                if kind == "point":
                    continue
                if kind != "quantile":
                    raise ParseError(f"{path.name}: type must be 'quantile' or 'point', got {kind!r}", line)
                m = _TARGET_RE.match(row["target"] or "")
                if not m:
                    raise ParseError(f"{path.name}: cannot read a horizon from target {row['target']!r}", line)
                horizon = int(m.group(1))
                origin = _date(row["forecast_date"], line, "forecast_date")
                target_date = _date(row["target_end_date"], line, "target_end_date")
                location = (row["location"] or "").strip()
                if not location:
                    raise ParseError(f"{path.name}: empty location", line)
                q = _number(row["quantile"], line, "quantile")
                idx = _match_level(q, levels)
                if idx is None:
                    raise ParseError(f"{path.name}: quantile level {q} is not a recognized level", line)
                value = _number(row["value"], line, "value")
                if value < 0 and "death" in row["target"]:
                    raise ParseError(f"{path.name}: negative death count {value}", line)
                team = row[team_col].strip() if team_col else path.stem
                cell = (location, origin, horizon)
                if targets.setdefault(cell, target_date) != target_date:
                    raise ParseError(f"{path.name}: conflicting target_end_date for {cell}", line)
                slot = raw.setdefault(cell + (team,), {})
                if idx in slot:
                    raise ParseError(f"{path.name}: duplicate level {levels[idx]} for {cell + (team,)}", line)
                slot[idx] = value

    stats = Counter()
    forecasts = {}
    for key in sorted(raw):
        slot = raw[key]
        if len(slot) != len(levels):
            logger.warning("dropping forecast %r: %d of %d levels present", key, len(slot), len(levels))
            stats["missing_levels"] += 1
            continue
        quantiles = [slot[i] for i in range(len(levels))]
        try:
            forecasts[key] = QuantileForecast(tuple(levels.tolist()), tuple(quantiles))
        except InvalidInputError as exc:
            logger.warning("dropping forecast %r: %s", key, exc)
            stats["crossing_quantiles"] += 1
    truth = parse_truth_csv(truth_file)
    used = {k[:3] for k in forecasts}
    targets = {c: d for c, d in targets.items() if c in used}
    return ForecastDataset(forecasts, truth, targets, dict(groups or {}), floor, stats=dict(stats))


def write_hub_csv(data, forecast_path, truth_path, label="inc death"):
    """Write a dataset with date origins as forecast and truth CSV files.

    Floats are written with ``repr`` so that reading the files back gives
    an identical dataset.
    """
    with open(forecast_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("model",) + FORECAST_COLUMNS)
        for (s, o, h, team), qf in sorted(data.forecasts.items()):
            target = data.targets[(s, o, h)]
            for a, q in zip(qf.levels, qf.quantiles):
                w.writerow([team, o.isoformat(), f"{h} wk ahead {label}", target.isoformat(), s, "quantile", repr(a), repr(q)])
    with open(truth_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRUTH_COLUMNS)
        for (s, d), v in sorted(data.truth.items()):
            w.writerow([d.isoformat(), s, repr(float(v))])


@dataclass
class SyntheticSpec:
    """Gaussian forecasters and a Gaussian truth.

    Parameters
    ----------
    means, sds : sequence of float
        One entry per team.
    truth : (float, float)
        Mean and standard deviation of the outcome distribution.
    seed : int
    spread_growth : float
        Standard deviations at horizon ``h`` are multiplied by
        ``1 + spread_growth * (h - 1)``.
    jitter : float
        Standard deviation of a random shift shared by the truth and every
        team's mean at each (series, origin, horizon), so forecasts vary
        over time.
    """

    means: tuple
    sds: tuple
    truth: tuple = (0.0, 0.1)
    seed: int = 0
    family: str = "gaussian"
    spread_growth: float = 0.0
    jitter: float = 0.0
    teams: tuple = None

    def __post_init__(self):
        self.means = tuple(float(m) for m in self.means)
        self.sds = tuple(float(s) for s in self.sds)
        if len(self.means) != len(self.sds) or not self.means:
            raise InvalidInputError("means and sds must be nonempty and of equal length")
        if min(self.sds) <= 0 or self.truth[1] <= 0:
            raise InvalidInputError("standard deviations must be positive")
        if self.family != "gaussian":
            raise InvalidInputError("only the gaussian family is supported")
        if self.teams is None:
            self.teams = tuple(f"team{i + 1}" for i in range(len(self.means)))
        elif len(self.teams) != len(self.means):
            raise InvalidInputError("one team name per mean is required")

    @property
    def k(self):
        return len(self.means)


START = dt.date(2020, 6, 1)


def generate_synthetic(spec, n_origins, n_horizons, n_series=1, levels=HUB_LEVELS, start=START):
    """Simulated panel of Gaussian quantile forecasts.

    Origins are weekly dates from ``start``; the target of horizon ``h`` is
    ``7 h - 2`` days after the origin.  The jitter shift and the outcome are
    drawn once per target date, so forecasts of the same target made at
    different origins share them.  The same seed always gives the same
    dataset.
    """
    levels = np.asarray(levels, dtype=float)
    z = norm.ppf(levels)
    rng = np.random.default_rng(spec.seed)
    means = np.array(spec.means)
    sds = np.array(spec.sds)
    forecasts, truth, targets, shifts = {}, {}, {}, {}
    for si in range(n_series):
        series = f"S{si + 1}"
        for oi in range(n_origins):
            origin = start + dt.timedelta(weeks=oi)
            for h in range(1, n_horizons + 1):
                grow = 1.0 + spec.spread_growth * (h - 1)
                target = origin + dt.timedelta(days=7 * h - 2)
                targets[(series, origin, h)] = target
                if (series, target) not in shifts:
                    shifts[(series, target)] = spec.jitter * rng.standard_normal() if spec.jitter else 0.0
                    truth[(series, target)] = float(spec.truth[0] + shifts[(series, target)] + spec.truth[1] * grow * rng.standard_normal())
                shift = shifts[(series, target)]
                for team, mu, sd in zip(spec.teams, means, sds):
                    q = mu + shift + sd * grow * z
                    forecasts[(series, origin, h, team)] = QuantileForecast(tuple(levels.tolist()), tuple(q.tolist()))
    return ForecastDataset(forecasts, truth, targets, floor=None)


#: Panel behind the bundled fixture files: an overconfident, a biased and a
#: dispersed forecaster around a truth that drifts from week to week.
FIXTURE_SPEC = SyntheticSpec(
    means=(100.0, 106.0, 97.0),
    sds=(4.0, 7.0, 12.0),
    truth=(100.0, 7.0),
    seed=20200601,
    spread_growth=0.25,
    jitter=15.0,
    teams=("alpha", "beta", "gamma"),
)
FIXTURE_SHAPE = dict(n_origins=14, n_horizons=4, n_series=3)


def fixture_paths():
    """Paths of the bundled fixture: forecasts CSV, truth CSV and config JSON."""
    from importlib.resources import files

    root = files("angular_pool") / "data"
    return (
        str(root / "fixture_forecasts.csv"),
        str(root / "fixture_truth.csv"),
        str(root / "fixture_config.json"),
    )

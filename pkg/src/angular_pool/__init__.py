"""Pooling of probability-distribution forecasts along angled lines.

Forecasts are piecewise-linear CDFs.  Pools average them vertically (CDF
values), horizontally (quantiles) or along lines at any angle in between.
"""

from .backtest import BacktestConfig, ForecastDataset, ScoreReport, fit_origin, group_summary, run_backtest
from .cdf import (
    HUB_LEVELS,
    AngledLine,
    PiecewiseLinearCdf,
    QuantileForecast,
    ScaledFrame,
    cdf_from_quantiles,
    density_at,
    intersect_line,
    link_transform,
    moments,
    sup_distance,
)
from .combine import (
    BetaPoolParams,
    CombinationSpec,
    RecalibrationParams,
    angular_combine_exact,
    angular_combine_grid,
    angular_quantiles,
    beta_pool,
    combine,
    horizontal_combine,
    hv_switch,
    median_combine,
    recalibrate,
    secondary_combine,
    trim_by_mean,
    vertical_combine,
)
from .errors import (
    AngularPoolError,
    ConfigError,
    DegenerateSupportError,
    InvalidAngleError,
    InvalidFractionError,
    InvalidInputError,
    NonMonotoneResultError,
    ParseError,
    UndefinedDensityError,
)
from .estimation import HistoryCase, estimate_weights, optimize_beta, optimize_scalar, optimize_theta
from .ingest import SyntheticSpec, generate_synthetic, parse_hub_csv, write_hub_csv
from .scoring import crps, interval_score, mqs, quantile_score, reliability_data, skill_score

__version__ = "0.1.0"

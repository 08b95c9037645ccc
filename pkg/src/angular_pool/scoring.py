"""Proper scores and calibration summaries for piecewise-linear CDFs."""

import logging
import math

import numpy as np

from .cdf import HUB_LEVELS
from .errors import InvalidInputError

logger = logging.getLogger(__name__)


def quantile_score(alpha, q, x):
    """Pinball loss ``2 * (alpha - 1{x <= q}) * (x - q)``; equality counts as ``x <= q``."""
    alpha = np.asarray(alpha, dtype=float)
    q = np.asarray(q, dtype=float)
    x = np.asarray(x, dtype=float)
    out = 2.0 * (alpha - (x <= q)) * (x - q)
    return float(out) if out.ndim == 0 else out


def mqs(cdf, x, levels=HUB_LEVELS):
    """Mean quantile score of ``cdf`` for observation ``x`` over ``levels``."""
    levels = np.asarray(levels, dtype=float)
    if levels.size == 0:
        raise InvalidInputError("levels must be nonempty")
    return float(np.mean(quantile_score(levels, cdf.quantile(levels), x)))


def interval_score(alpha, lower, upper, x):
    """Winkler score of the central ``(1 - alpha)`` interval ``[lower, upper]``."""
    if lower > upper:
        raise InvalidInputError("interval lower bound exceeds upper bound")
    score = upper - lower
    if x <= lower:
        score += 2.0 / alpha * (lower - x)
    if x >= upper:
        score += 2.0 / alpha * (x - upper)
    return float(score)


def cdf_interval_score(cdf, x, alpha):
    """Interval score of the central interval read off ``cdf``."""
    lower, upper = cdf.quantile([alpha / 2.0, 1.0 - alpha / 2.0])
    return interval_score(alpha, lower, upper, x)


def crps(cdf, z):
    """Closed-form CRPS, the integral of ``(F(x) - 1{x > z})**2``.

    The integrand is quadratic on each segment, so each piece integrates to
    ``width * (u*u + u*v + v*v) / 3`` with ``u, v`` the end values.
    """
    x, p = cdf.x, cdf.p
    z = float(z)
    total = 0.0
    if z < x[0]:
        total += x[0] - z
    elif z > x[-1]:
        total += z - x[-1]
    else:
        # split the segment containing z so no segment straddles it
        k = int(np.searchsorted(x, z, side="left"))
        pz = float(cdf.cdf(z, "lower"))
        x = np.concatenate([x[:k], [z], x[k:]])
        p = np.concatenate([p[:k], [pz], p[k:]])
    width = np.diff(x)
    c = (x[:-1] >= z).astype(float)
    u = p[:-1] - c
    v = p[1:] - c
    total += float(np.sum(width * (u * u + u * v + v * v)) / 3.0)
    return total


def skill_score(method_scores, benchmark_scores):
    """Percentage improvement over a benchmark: ``100 * (1 - geomean(ratio))``.

    Pairs with a zero score on either side are dropped with a warning, since
    the ratio is then 0 or undefined.  Returns NaN if nothing is left.
    """
    m = np.asarray(method_scores, dtype=float)
    b = np.asarray(benchmark_scores, dtype=float)
    if m.shape != b.shape:
        raise InvalidInputError("method and benchmark score lists differ in length")
    if np.any(m < 0) or np.any(b < 0) or not (np.all(np.isfinite(m)) and np.all(np.isfinite(b))):
        raise InvalidInputError("scores must be finite and nonnegative")
    keep = (m > 0) & (b > 0)
    if not keep.all():
        logger.warning("skill score: dropping %d pair(s) with a zero score", int((~keep).sum()))
    if not keep.any():
        return math.nan
    ratios = m[keep] / b[keep]
    return float(100.0 * (1.0 - np.exp(np.mean(np.log(ratios)))))


def reliability_data(cdfs_and_obs, levels=HUB_LEVELS):
    """For each level, the fraction of observations at or below that quantile."""
    pairs = list(cdfs_and_obs)
    if not pairs:
        raise InvalidInputError("need at least one forecast/observation pair")
    levels = np.asarray(levels, dtype=float)
    hits = np.array([np.asarray(x) <= F.quantile(levels) for F, x in pairs])
    return list(zip(levels.tolist(), hits.mean(axis=0).tolist()))


def interval_coverage(cdfs_and_obs, alpha):
    """Fraction of observations inside the central ``(1 - alpha)`` intervals."""
    pairs = list(cdfs_and_obs)
    if not pairs:
        raise InvalidInputError("need at least one forecast/observation pair")
    inside = 0
    for F, x in pairs:
        lo, hi = F.quantile([alpha / 2.0, 1.0 - alpha / 2.0])
        inside += lo <= x <= hi
    return inside / len(pairs)


#: Metrics computed for every scored forecast, keyed by report name.
METRICS = ("mqs", "interval_score_95", "interval_score_50", "coverage_95", "coverage_50", "crps")


def score_forecast(cdf, x, levels=HUB_LEVELS):
    """All per-forecast metrics in :data:`METRICS`."""
    lo95, lo50, hi50, hi95 = cdf.quantile([0.025, 0.25, 0.75, 0.975])
    return {
        "mqs": mqs(cdf, x, levels),
        "interval_score_95": interval_score(0.05, lo95, hi95, x),
        "interval_score_50": interval_score(0.5, lo50, hi50, x),
        "coverage_95": float(lo95 <= x <= hi95),
        "coverage_50": float(lo50 <= x <= hi50),
        "crps": crps(cdf, x),
    }

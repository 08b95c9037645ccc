"""In-sample parameter selection by exhaustive grid search.

Every optimizer minimizes the mean quantile score (MQS) of a combining
method over a history of past cases and returns a member of the supplied
grid.  Ties are broken toward the simplest parameter value so results do
not depend on evaluation order.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

from .cdf import HUB_LEVELS, PiecewiseLinearCdf
from .combine import (
    BetaPoolParams,
    angular_combine_exact,
    angular_quantiles,
    horizontal_combine,
    normalize_weights,
    vertical_combine,
)
from .errors import InvalidInputError
from .scoring import mqs, quantile_score

THETA_GRID = tuple(range(91))


@dataclass
class HistoryCase:
    """One past target: member forecasts, their weights and the outcome."""

    cdfs: list
    observation: float
    weights: np.ndarray = None
    teams: tuple = ()
    origin: object = None
    horizon: object = None
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.cdfs:
            raise InvalidInputError("a history case needs at least one forecast")
        if self.weights is not None:
            self.weights = normalize_weights(self.weights, len(self.cdfs))


def n_workers():
    """Worker cap from ``ANGULAR_POOL_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("ANGULAR_POOL_THREADS", "1")))
    except ValueError:
        return 1


def _evaluate(objective, grid):
    workers = min(n_workers(), len(grid))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(objective, grid))
    return [objective(g) for g in grid]


def grid_argmin(objective, grid, tie_key=None, rtol=1e-12):
    """Grid point with the smallest objective.

    Values within ``rtol`` of the minimum count as ties, resolved by the
    smallest ``tie_key`` (default: the grid value itself).
    """
    grid = list(grid)
    if not grid:
        raise InvalidInputError("empty parameter grid")
    scores = np.array(_evaluate(objective, grid), dtype=float)
    if np.all(np.isnan(scores)):
        raise InvalidInputError("objective is undefined on the whole grid")
    best = np.nanmin(scores)
    tied = [g for g, s in zip(grid, scores) if s <= best + rtol * abs(best) + 1e-300]
    return min(tied, key=tie_key) if tie_key else min(tied)


def in_sample_mqs(history, build, levels=HUB_LEVELS):
    """Mean over cases of the MQS of ``build(case)``."""
    history = list(history)
    if not history:
        raise InvalidInputError("empty history")
    return float(np.mean([mqs(build(c), c.observation, levels) for c in history]))


def _case_weights(case, weighted):
    return case.weights if weighted else None


def case_pool(case, direction, theta=None, weighted=False):
    """Pool of ``case.cdfs`` in ``direction``, memoized on the case.

    The cache key includes the weights, so a case can be reused after its
    weights are re-estimated.
    """
    w = _case_weights(case, weighted)
    key = (direction, theta, None if w is None else tuple(np.round(w, 15)))
    if key not in case.cache:
        if direction == "vertical" or (direction == "angular" and theta == 90):
            out = vertical_combine(case.cdfs, w)
        elif direction == "horizontal" or theta == 0:
            out = horizontal_combine(case.cdfs, w)
        else:
            out = angular_combine_exact(case.cdfs, theta, w)
        case.cache[key] = out
    return case.cache[key]


def angular_build(theta, weighted=False):
    """Builder for the (weighted) angular pool at ``theta`` degrees."""
    return lambda case: case_pool(case, "angular", theta, weighted)


def _angular_mqs(case, theta, weighted, levels):
    w = _case_weights(case, weighted)
    key = ("angular_q", theta, None if w is None else tuple(np.round(w, 15)), levels.tobytes())
    if key not in case.cache:
        q = angular_quantiles(case.cdfs, theta, levels, w)
        case.cache[key] = float(np.mean(quantile_score(levels, q, case.observation)))
    return case.cache[key]


def optimize_theta(history, weighted=False, candidates=THETA_GRID, levels=HUB_LEVELS):
    """Angle minimizing the mean in-sample MQS; ties go to the smaller angle.

    Only the pooled quantiles at ``levels`` are needed, so the pools are
    never built in full.
    """
    history = list(history)
    if not history:
        raise InvalidInputError("empty history")
    levels = np.asarray(levels, dtype=float)
    return grid_argmin(lambda th: float(np.mean([_angular_mqs(c, th, weighted, levels) for c in history])), candidates)


def estimate_weights(records, min_periods=5):
    """Combining weights inversely proportional to each team's mean in-sample MQS.

    Parameters
    ----------
    records : mapping
        Team -> sequence of past MQS values (NaN marks an unavailable period).
    min_periods : int
        Teams with fewer available scores are assigned the average of the
        mean MQS of the teams that do qualify.

    Returns
    -------
    dict
        Team -> weight, in the order of ``records``.  If no team qualifies,
        weights are equal.  Teams with a mean MQS of zero share all the
        weight, which is the limit of inverse proportionality.
    """
    teams = list(records)
    if not teams:
        raise InvalidInputError("need at least one team")
    means = {}
    for team in teams:
        vals = np.asarray(records[team], dtype=float)
        vals = vals[np.isfinite(vals)]
        if vals.size >= min_periods:
            means[team] = float(vals.mean())
    if not means:
        return {t: 1.0 / len(teams) for t in teams}
    fill = float(np.mean(list(means.values())))
    score = np.array([means.get(t, fill) for t in teams])
    if np.any(score <= 0):
        inv = (score <= 0).astype(float)
    else:
        inv = 1.0 / score
    w = inv / inv.sum()
    return dict(zip(teams, w.tolist()))


def optimize_scalar(history, build, grid, levels=HUB_LEVELS):
    """Grid value minimizing in-sample MQS of ``build(case, value)``; ties to the smallest."""
    history = list(history)
    if not history:
        raise InvalidInputError("empty history")
    return grid_argmin(lambda v: in_sample_mqs(history, lambda c: build(c, v), levels), grid)


def optimize_beta(history, grid_a, grid_b, weighted=False, levels=HUB_LEVELS):
    """Beta-transformed linear pool parameters on the product grid.

    Ties go to the pair closest to (1, 1), then lexicographically smallest.
    """
    history = list(history)
    grid = [(float(a), float(b)) for a in grid_a for b in grid_b]
    if not history:
        raise InvalidInputError("empty history")
    if not grid:
        raise InvalidInputError("empty parameter grid")
    pools = [case_pool(c, "vertical", weighted=weighted) for c in history]

    def objective(ab):
        a, b = ab
        total = 0.0
        for pool, case in zip(pools, history):
            F = pool if (a, b) == (1.0, 1.0) else PiecewiseLinearCdf(pool.x, betainc(a, b, pool.p))
            total += mqs(F, case.observation, levels)
        return total / len(history)

    a, b = grid_argmin(objective, grid, tie_key=lambda ab: (math.hypot(ab[0] - 1, ab[1] - 1), ab))
    return BetaPoolParams(a, b)

"""Pooling of piecewise-linear CDFs: vertical, horizontal and angular.

Vertical pooling aggregates probabilities at fixed outcome values,
horizontal pooling aggregates quantiles at fixed probability levels, and
angular pooling aggregates the points where each CDF meets a family of
parallel lines tilted by ``theta`` degrees from the horizontal.

Mean and weighted pools are computed exactly: a convex combination of
piecewise-linear curves is piecewise linear on the union of their
breakpoints.  The angular mean uses the quantile shift
``Q(alpha) -> Q(alpha) + alpha / tan(theta)``, under which angular averaging
becomes vertical averaging.  The line-by-line grid procedure is kept for
medians and as an independent cross-check.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

from .cdf import (
    HUB_LEVELS,
    PiecewiseLinearCdf,
    ScaledFrame,
    _check_angle,
    _from_scaled,
    _lower_limit,
    _upper_limit,
    cot,
    intersect_scaled,
    moments,
)
from .errors import ConfigError, InvalidFractionError, InvalidInputError

DIRECTIONS = ("vertical", "horizontal", "angular")
AGGREGATORS = ("mean", "weighted", "median", "trimmed")
TRIM_KINDS = ("exterior", "interior")


def _as_list(cdfs):
    cdfs = list(cdfs)
    if not cdfs:
        raise InvalidInputError("need at least one CDF to combine")
    return cdfs


def normalize_weights(weights, k):
    """Validate weights and rescale them to sum to one; ``None`` means equal."""
    if weights is None:
        return np.full(k, 1.0 / k)
    w = np.asarray(weights, dtype=float).ravel()
    if w.size != k:
        raise InvalidInputError(f"got {w.size} weights for {k} forecasts")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise InvalidInputError("weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0:
        raise InvalidInputError("weights must not all be zero")
    return w / total


def _drop_zero_weights(cdfs, w):
    keep = w > 0
    if keep.all():
        return cdfs, w
    return [F for F, k in zip(cdfs, keep) if k], w[keep]


def _limits(curves, grid):
    lo = np.empty((len(curves), grid.size))
    hi = np.empty_like(lo)
    for i, (a, b) in enumerate(curves):
        lo[i] = _lower_limit(grid, a, b)
        hi[i] = _upper_limit(grid, a, b)
    return lo, hi


def _crossings(grid, lo, hi):
    # Each curve is linear on every open grid interval, from its right limit
    # at the left end to its left limit at the right end.
    start, end = hi[:, :-1], lo[:, 1:]
    ds = start[:, None, :] - start[None, :, :]
    de = end[:, None, :] - end[None, :, :]
    mask = ds * de < 0
    if not mask.any():
        return np.empty(0)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = ds / (ds - de)
    pts = grid[:-1] + t * np.diff(grid)
    return np.unique(pts[mask])


def _pool_curves(curves, w=None, agg="mean"):
    """Aggregate monotone polylines ``(a, b)`` at common values of ``a``.

    Returns the pooled polyline as interleaved left/right limits, which the
    CDF constructor then deduplicates.
    """
    grid = np.unique(np.concatenate([a for a, _ in curves]))
    lo, hi = _limits(curves, grid)
    if agg == "median":
        extra = _crossings(grid, lo, hi)
        if extra.size:
            grid = np.union1d(grid, extra)
            lo, hi = _limits(curves, grid)
        low, high = np.median(lo, axis=0), np.median(hi, axis=0)
    elif agg == "mean":
        low, high = w @ lo, w @ hi
    else:
        raise InvalidInputError(f"unsupported pointwise aggregator {agg!r}")
    return np.repeat(grid, 2), np.column_stack([low, high]).ravel()


def _prepare(cdfs, weights, agg):
    cdfs = _as_list(cdfs)
    if agg not in ("mean", "median"):
        raise InvalidInputError(f"aggregator must be 'mean' or 'median', not {agg!r}")
    w = None
    if agg == "mean":
        w = normalize_weights(weights, len(cdfs))
        cdfs, w = _drop_zero_weights(cdfs, w)
    return cdfs, w


def vertical_combine(cdfs, weights=None, agg="mean"):
    """Linear opinion pool (``agg="mean"``) or pointwise median of CDF values.

    Jumps are carried through exactly: left and right limits are pooled
    separately, so a jump in any member becomes a jump in the pool.
    """
    cdfs, w = _prepare(cdfs, weights, agg)
    x, p = _pool_curves([(F.x, F.p) for F in cdfs], w, agg)
    return PiecewiseLinearCdf(x, p)


def horizontal_combine(cdfs, weights=None, agg="mean"):
    """Quantile averaging (Vincentization), or the pointwise quantile median."""
    cdfs, w = _prepare(cdfs, weights, agg)
    p, x = _pool_curves([(F.p, F.x) for F in cdfs], w, agg)
    return PiecewiseLinearCdf(x, p)


def angular_combine_grid(cdfs, theta_deg, weights=None, agg="mean", m=1001, frame=None):
    """Angular pooling by explicit line intersection on a grid of ``m`` lines.

    The lines pass through ``m`` evenly spaced points of the diagonal of the
    unit box (after scaling the outcome axis to ``frame``).  For each line
    the ``k`` intersection points are aggregated coordinate-wise and the
    resulting points are joined by straight segments.

    Parameters
    ----------
    cdfs : sequence of PiecewiseLinearCdf
    theta_deg : float
        Angle in [0, 90]; 0 is horizontal pooling and 90 vertical pooling.
    weights : array_like, optional
        Used when ``agg="mean"``.
    agg : {"mean", "median"}
    m : int
        Number of lines.
    frame : ScaledFrame, optional
        Defaults to the smallest frame containing every support.
    """
    theta = _check_angle(theta_deg)
    cdfs, w = _prepare(cdfs, weights, agg)
    if int(m) < 2:
        raise InvalidInputError("need at least 2 grid lines")
    frame = frame or ScaledFrame.for_cdfs(cdfs)
    d = np.linspace(0.0, 1.0, int(m))
    X = np.empty((len(cdfs), d.size))
    P = np.empty_like(X)
    for i, F in enumerate(cdfs):
        X[i], P[i] = intersect_scaled(frame.scale(F.x), F.p, theta, d)
    if agg == "median":
        x, p = np.median(X, axis=0), np.median(P, axis=0)
    else:
        x, p = w @ X, w @ P
    p = np.clip(p, 0.0, 1.0)
    order = np.lexsort((p, x))
    x, p = x[order], np.maximum.accumulate(p[order])
    if p[0] > 0:
        x, p = np.r_[x[0], x], np.r_[0.0, p]
    if p[-1] < 1:
        x, p = np.r_[x, x[-1]], np.r_[p, 1.0]
    return PiecewiseLinearCdf(frame.unscale(x), p)


def angular_combine_exact(cdfs, theta_deg, weights=None, agg="mean", frame=None):
    """Angular pooling through the quantile shift, with no grid error.

    Each CDF is shifted by ``alpha / tan(theta)`` in scaled coordinates, the
    shifted CDFs are pooled vertically and the shift is undone.  At 90
    degrees this is exactly :func:`vertical_combine`.
    """
    theta = _check_angle(theta_deg, lo_open=True)
    if theta == 90:
        return vertical_combine(cdfs, weights, agg)
    cdfs, w = _prepare(cdfs, weights, agg)
    frame = frame or ScaledFrame.for_cdfs(cdfs)
    ct = cot(theta)
    curves = [(frame.scale(F.x) + F.p * ct, F.p) for F in cdfs]
    a, p = _pool_curves(curves, w, agg)
    # shifted CDFs have slope <= tan(theta), so undoing the shift cannot
    # reverse the order of knots beyond rounding
    return _from_scaled(a - p * ct, p, frame)


def angular_quantiles(cdfs, theta_deg, levels, weights=None):
    """Quantiles of the angular mean pool at ``levels``, without building it.

    Agrees with ``angular_combine_exact(...).quantile(levels)`` (midpoint rule
    on flats) but is much cheaper, which matters inside angle searches.
    """
    theta = _check_angle(theta_deg)
    levels = np.asarray(levels, dtype=float)
    cdfs = _as_list(cdfs)
    w = normalize_weights(weights, len(cdfs))
    if theta == 0:
        return w @ np.array([F.quantile(levels) for F in cdfs])
    if theta == 90:
        return vertical_combine(cdfs, w).quantile(levels)
    cdfs, w = _drop_zero_weights(cdfs, w)
    frame = ScaledFrame.for_cdfs(cdfs)
    ct = cot(theta)
    # shifted knots are strictly increasing, so plain interpolation is exact
    shifted = [frame.scale(F.x) + F.p * ct for F in cdfs]
    grid = np.unique(np.concatenate(shifted))
    pooled = sum(wi * np.interp(grid, a, F.p) for wi, a, F in zip(w, shifted, cdfs))
    a = 0.5 * (_lower_limit(levels, pooled, grid) + _upper_limit(levels, pooled, grid))
    return frame.unscale(a - levels * ct)


def median_combine(cdfs, direction="vertical", theta_deg=None, m=1001, route="grid"):
    """Median pool along the given direction.

    For an odd number of forecasts every direction yields the same CDF.
    Angular medians use the grid procedure unless ``route="exact"``.
    """
    if direction == "vertical":
        return vertical_combine(cdfs, agg="median")
    if direction == "horizontal":
        return horizontal_combine(cdfs, agg="median")
    if direction != "angular":
        raise InvalidInputError(f"unknown direction {direction!r}")
    if theta_deg is None:
        raise InvalidInputError("angular median needs an angle")
    if theta_deg == 0:
        return horizontal_combine(cdfs, agg="median")
    if route == "exact":
        return angular_combine_exact(cdfs, theta_deg, agg="median")
    return angular_combine_grid(cdfs, theta_deg, agg="median", m=m)


def trim_indices(means, kind, fraction):
    """Indices (in input order) kept by mean-based trimming.

    ``round(fraction * k / 2)`` forecasts are counted from each end of the
    ordering by mean; exterior trimming drops them, interior trimming keeps
    only them.  Ties in the means keep input order.
    """
    if kind not in TRIM_KINDS:
        raise InvalidInputError(f"trim kind must be one of {TRIM_KINDS}")
    if not 0.0 <= fraction < 1.0:
        raise InvalidFractionError(f"trim fraction {fraction} outside [0, 1)")
    means = np.asarray(means, dtype=float)
    k = means.size
    n = int(math.floor(fraction * k / 2.0 + 0.5))
    order = np.argsort(means, kind="stable")
    if kind == "exterior":
        kept = order[n : k - n]
    elif 2 * n >= k:
        kept = order
    else:
        kept = np.concatenate([order[:n], order[k - n :]])
    if kept.size == 0:
        raise InvalidFractionError(f"{kind} trimming at {fraction} leaves no forecasts")
    return np.sort(kept)


def trim_by_mean(cdfs, kind, fraction):
    cdfs = _as_list(cdfs)
    idx = trim_indices([moments(F)[0] for F in cdfs], kind, fraction)
    return [cdfs[i] for i in idx]


def hv_switch(cdfs, mqs_h, mqs_v, weights=None, agg="mean"):
    """Horizontal pool if its in-sample score is no worse, else vertical."""
    if not (math.isfinite(mqs_h) and math.isfinite(mqs_v)):
        raise InvalidInputError("switching scores must be finite")
    if mqs_h <= mqs_v:
        return horizontal_combine(cdfs, weights, agg)
    return vertical_combine(cdfs, weights, agg)


@dataclass(frozen=True)
class BetaPoolParams:
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InvalidInputError("beta parameters must be positive")


def beta_pool(cdfs, weights=None, params=BetaPoolParams()):
    """Beta-transformed linear pool.

    The regularized incomplete beta function is applied to the linear
    pool's probabilities at its knots; the result is interpolated linearly
    between the same knots.
    """
    pool = vertical_combine(cdfs, weights)
    if params.a == 1 and params.b == 1:
        return pool
    return PiecewiseLinearCdf(pool.x, betainc(params.a, params.b, pool.p))


def _default_edges():
    return tuple(np.concatenate([[0.0], HUB_LEVELS, [1.0]]))


@dataclass(frozen=True)
class RecalibrationParams:
    gamma: float = 1.0
    bin_edges: tuple = field(default_factory=_default_edges)

    def __post_init__(self):
        if not self.gamma > 0:
            raise InvalidInputError("gamma must be positive")
        e = np.asarray(self.bin_edges, dtype=float)
        if e.size < 2 or e[0] != 0 or e[-1] != 1 or np.any(np.diff(e) <= 0):
            raise InvalidInputError("bin edges must increase strictly from 0 to 1")


def recalibrate(cdf, params):
    """Reweight the probability mass of each bin by a power map.

    Bins are bounded by the quantiles at ``params.bin_edges``.  Bin masses
    ``m_j`` become ``m_j**gamma / sum(m**gamma)``; within a bin the CDF keeps
    its shape.
    """
    if params.gamma == 1:
        return cdf
    e = np.asarray(params.bin_edges, dtype=float)
    mass = np.diff(e)
    with np.errstate(divide="ignore"):
        powered = np.where(mass > 0, mass**params.gamma, 0.0)
    new_edges = np.concatenate([[0.0], np.cumsum(powered) / powered.sum()])
    new_edges[-1] = 1.0
    xlo, xhi = cdf.quantile_limits(e)
    x = np.concatenate([cdf.x, xlo, xhi])
    p = np.concatenate([cdf.p, e, e])
    order = np.lexsort((p, x))
    x, p = x[order], p[order]
    return PiecewiseLinearCdf(x, np.interp(p, e, new_edges))


def secondary_combine(cdf_h, cdf_v, w, direction="vertical"):
    """Pool two already-combined forecasts with weights ``(w, 1 - w)``."""
    if not 0.0 <= w <= 1.0:
        raise InvalidInputError(f"secondary weight {w} outside [0, 1]")
    weights = [w, 1.0 - w]
    if direction == "vertical":
        return vertical_combine([cdf_h, cdf_v], weights)
    if direction == "horizontal":
        return horizontal_combine([cdf_h, cdf_v], weights)
    raise InvalidInputError(f"secondary direction must be vertical or horizontal, not {direction!r}")


@dataclass(frozen=True)
class CombinationSpec:
    """Direction and aggregator of a pooling method.

    ``route`` picks the angular algorithm: ``"exact"`` (quantile shift),
    ``"grid"`` (line intersections) or ``None`` for the default, which is
    exact for means and grid for medians.
    """

    direction: str = "horizontal"
    theta_deg: float = None
    aggregator: str = "mean"
    weights: tuple = None
    trim_kind: str = "exterior"
    trim_fraction: float = 0.0
    m: int = 1001
    route: str = None

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ConfigError(f"direction must be one of {DIRECTIONS}")
        if self.aggregator not in AGGREGATORS:
            raise ConfigError(f"aggregator must be one of {AGGREGATORS}")
        if self.direction == "angular":
            if self.theta_deg is None:
                raise ConfigError("angular direction needs theta_deg")
            _check_angle(self.theta_deg)
        elif self.theta_deg is not None:
            raise ConfigError("theta_deg is only meaningful for the angular direction")
        if self.aggregator == "weighted":
            if self.weights is None:
                raise ConfigError("weighted aggregator needs weights")
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
                raise ConfigError("weights must be nonnegative and sum to 1")
        if self.aggregator == "trimmed":
            if self.trim_kind not in TRIM_KINDS:
                raise ConfigError(f"trim kind must be one of {TRIM_KINDS}")
            if not 0.0 <= self.trim_fraction < 1.0:
                raise InvalidFractionError("trim fraction must lie in [0, 1)")
        if int(self.m) < 2:
            raise ConfigError("m must be at least 2")
        if self.route not in (None, "exact", "grid"):
            raise ConfigError("route must be 'exact' or 'grid'")


def combine(cdfs, spec):
    """Pool ``cdfs`` as described by a :class:`CombinationSpec`."""
    cdfs = _as_list(cdfs)
    weights = None
    agg = "mean"
    if spec.aggregator == "weighted":
        weights = spec.weights
        if len(weights) != len(cdfs):
            raise InvalidInputError(f"got {len(weights)} weights for {len(cdfs)} forecasts")
    elif spec.aggregator == "median":
        agg = "median"
    elif spec.aggregator == "trimmed":
        cdfs = trim_by_mean(cdfs, spec.trim_kind, spec.trim_fraction)

    if spec.direction == "vertical":
        return vertical_combine(cdfs, weights, agg)
    if spec.direction == "horizontal" or spec.theta_deg == 0:
        return horizontal_combine(cdfs, weights, agg)
    route = spec.route or ("grid" if agg == "median" else "exact")
    if route == "grid":
        return angular_combine_grid(cdfs, spec.theta_deg, weights, agg, m=spec.m)
    return angular_combine_exact(cdfs, spec.theta_deg, weights, agg)

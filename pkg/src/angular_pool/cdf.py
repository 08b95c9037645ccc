"""Piecewise-linear CDFs and the geometry used by angular combining.

A CDF is stored as an ordered list of knots ``(x, p)``.  Consecutive knots
sharing an ``x`` value encode a jump (a vertical segment of the CDF graph)
and consecutive knots sharing a ``p`` value encode a gap in the support (a
horizontal segment).  Both coordinates are nondecreasing, so the graph is a
monotone polyline from ``(x[0], 0)`` to ``(x[-1], 1)`` and the CDF and its
quantile function are handled by the same code with the axes swapped.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSupportError,
    InvalidAngleError,
    InvalidInputError,
    NonMonotoneResultError,
    UndefinedDensityError,
)

#: Probability levels requested from COVID-19 Forecast Hub submitters.
HUB_LEVELS = np.array(
    [0.01, 0.025]
    + [round(0.05 * i, 2) for i in range(1, 20)]
    + [0.975, 0.99]
)

FLAT_RULES = ("lower", "upper", "midpoint")

_TOL = 1e-9


def _lower_limit(v, a, b):
    """``b`` at the first point of the polyline ``(a, b)`` where ``a`` reaches ``v``.

    ``a`` must be nondecreasing.  Values below ``a[0]`` map to ``b[0]`` and
    values above ``a[-1]`` map to ``b[-1]``.
    """
    if a.size > 1 and (a[1:] > a[:-1]).all():
        # no repeated abscissae, so both limits coincide
        return np.interp(v, a, b)
    v = np.asarray(v, dtype=float)
    n = a.size
    i = np.searchsorted(a, v, side="left")
    ic = np.clip(i, 1, n - 1)
    a0, a1 = a[ic - 1], a[ic]
    b0, b1 = b[ic - 1], b[ic]
    da = a1 - a0
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(da > 0, (v - a0) / np.where(da > 0, da, 1.0), 0.0)
    out = b0 + t * (b1 - b0)
    ii = np.minimum(i, n - 1)
    out = np.where((i < n) & (a[ii] == v), b[ii], out)
    out = np.where(i == 0, b[0], out)
    out = np.where(i == n, b[-1], out)
    return out


def _upper_limit(v, a, b):
    """``b`` at the last point of the polyline ``(a, b)`` where ``a`` equals ``v``."""
    if a.size > 1 and (a[1:] > a[:-1]).all():
        # no repeated abscissae, so both limits coincide
        return np.interp(v, a, b)
    v = np.asarray(v, dtype=float)
    n = a.size
    j = np.searchsorted(a, v, side="right")
    jc = np.clip(j, 1, n - 1)
    a0, a1 = a[jc - 1], a[jc]
    b0, b1 = b[jc - 1], b[jc]
    da = a1 - a0
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(da > 0, (v - a0) / np.where(da > 0, da, 1.0), 0.0)
    out = b0 + t * (b1 - b0)
    jm = np.maximum(j - 1, 0)
    out = np.where((j > 0) & (a[jm] == v), b[jm], out)
    out = np.where(j == 0, b[0], out)
    out = np.where(j == n, b[-1], out)
    return out


def _apply_rule(lo, hi, rule):
    if rule == "lower":
        return lo
    if rule == "upper":
        return hi
    if rule == "midpoint":
        return 0.5 * (lo + hi)
    raise InvalidInputError(f"unknown flat rule {rule!r}; expected one of {FLAT_RULES}")


def _scalar_or_array(value, like):
    if np.ndim(like) == 0:
        return float(value)
    return value


class PiecewiseLinearCdf:
    """A bounded continuous-or-jump CDF given by linear interpolation of knots.

    Parameters
    ----------
    x, p : array_like
        Knot coordinates.  Both must be nondecreasing with ``p[0] == 0`` and
        ``p[-1] == 1``.  Floating-point drift up to ``tol`` is repaired, and
        duplicate knots, leading knots at ``p == 0`` and trailing knots at
        ``p == 1`` are dropped so that the representation is canonical.

    Examples
    --------
    >>> F = PiecewiseLinearCdf([0.0, 2.0, 4.0], [0.0, 0.5, 1.0])
    >>> F.cdf(1.0), F.quantile(0.75)
    (0.25, 3.0)
    """

    __slots__ = ("_x", "_p")

    def __init__(self, x, p, *, tol=_TOL):
        x = np.array(x, dtype=float).ravel()
        p = np.array(p, dtype=float).ravel()
        if x.size != p.size:
            raise InvalidInputError("x and p must have the same length")
        if x.size < 2:
            raise InvalidInputError("a CDF needs at least 2 knots")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
            raise InvalidInputError("knots must be finite")
        if p.min() < -tol or p.max() > 1 + tol:
            raise InvalidInputError("probabilities must lie in [0, 1]")
        xtol = tol * max(1.0, float(np.abs(x).max()))
        if np.any(np.diff(x) < -xtol):
            raise InvalidInputError("knot x values must be nondecreasing")
        if np.any(np.diff(p) < -tol):
            raise InvalidInputError("knot p values must be nondecreasing")
        if abs(p[0]) > tol or abs(p[-1] - 1.0) > tol:
            raise InvalidInputError("first knot must have p=0 and last knot p=1")
        p = np.clip(p, 0.0, 1.0)
        p[0], p[-1] = 0.0, 1.0
        x = np.maximum.accumulate(x)
        p = np.maximum.accumulate(p)

        keep = np.ones(x.size, dtype=bool)
        keep[1:] = (np.diff(x) != 0) | (np.diff(p) != 0)
        x, p = x[keep], p[keep]
        start = int(np.searchsorted(p, 0.0, side="right")) - 1
        stop = int(np.searchsorted(p, 1.0, side="left")) + 1
        x, p = x[start:stop].copy(), p[start:stop].copy()
        x.setflags(write=False)
        p.setflags(write=False)
        self._x = x
        self._p = p

    # -- construction -----------------------------------------------------
    @classmethod
    def from_knots(cls, knots):
        arr = np.asarray(knots, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise InvalidInputError("knots must be a sequence of (x, p) pairs")
        return cls(arr[:, 0], arr[:, 1])

    @classmethod
    def uniform(cls, lo=0.0, hi=1.0):
        return cls([lo, hi], [0.0, 1.0])

    # -- accessors ---------------------------------------------------------
    @property
    def x(self):
        return self._x

    @property
    def p(self):
        return self._p

    @property
    def knots(self):
        return np.column_stack([self._x, self._p])

    @property
    def support(self):
        return float(self._x[0]), float(self._x[-1])

    def __len__(self):
        return self._x.size

    def __repr__(self):
        lo, hi = self.support
        return f"PiecewiseLinearCdf({len(self)} knots, support=[{lo:g}, {hi:g}])"

    def __eq__(self, other):
        if not isinstance(other, PiecewiseLinearCdf):
            return NotImplemented
        return np.array_equal(self._x, other._x) and np.array_equal(self._p, other._p)

    __hash__ = None

    # -- evaluation ----------------------------------------------------------
    def cdf_limits(self, x):
        """Left and right limits of the CDF at ``x`` (they differ at jumps)."""
        return _lower_limit(x, self._x, self._p), _upper_limit(x, self._x, self._p)

    def cdf(self, x, flat_rule="midpoint"):
        """Evaluate the CDF.

        At a jump the CDF is set-valued; ``flat_rule`` picks the lower end,
        the upper end or the midpoint of the jump.
        """
        lo, hi = self.cdf_limits(x)
        return _scalar_or_array(_apply_rule(lo, hi, flat_rule), x)

    def quantile_limits(self, alpha):
        return _lower_limit(alpha, self._p, self._x), _upper_limit(alpha, self._p, self._x)

    def quantile(self, alpha, flat_rule="midpoint"):
        """Quantile function; ``flat_rule`` applies across gaps in the support."""
        alpha = np.asarray(alpha, dtype=float)
        if np.any((alpha < 0) | (alpha > 1)):
            raise InvalidInputError("probability levels must lie in [0, 1]")
        lo, hi = self.quantile_limits(alpha)
        return _scalar_or_array(_apply_rule(lo, hi, flat_rule), alpha)

    def moments(self):
        return moments(self)

    @property
    def mean(self):
        return moments(self)[0]

    @property
    def variance(self):
        return moments(self)[1]

    def density(self, x):
        return density_at(self, x)

    def sample(self, size, rng=None):
        """Draw by inverse-transform sampling."""
        rng = np.random.default_rng(rng)
        return self.quantile(rng.random(size))

    # -- coordinate frames -----------------------------------------------------
    def scaled(self, frame):
        return PiecewiseLinearCdf(frame.scale(self._x), self._p)

    def unscaled(self, frame):
        return PiecewiseLinearCdf(frame.unscale(self._x), self._p)

    # -- serialization -----------------------------------------------------------
    def to_dict(self):
        return {"knots": [[float(a), float(b)] for a, b in zip(self._x, self._p)]}

    @classmethod
    def from_dict(cls, data):
        try:
            knots = data["knots"]
        except (KeyError, TypeError):
            raise InvalidInputError("CDF JSON must be an object with a 'knots' array") from None
        return cls.from_knots(knots)

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"malformed CDF JSON: {exc}") from None
        return cls.from_dict(data)


@dataclass(frozen=True)
class QuantileForecast:
    """Quantiles of one forecaster for one target at a set of levels."""

    levels: tuple
    quantiles: tuple

    def __post_init__(self):
        levels = tuple(float(a) for a in self.levels)
        quantiles = tuple(float(q) for q in self.quantiles)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "quantiles", quantiles)
        if len(levels) != len(quantiles):
            raise InvalidInputError("levels and quantiles differ in length")
        if len(levels) < 2:
            raise InvalidInputError("at least 2 probability levels are required")
        lv = np.array(levels)
        qv = np.array(quantiles)
        if np.any((lv < 0) | (lv > 1)):
            raise InvalidInputError("probability levels must lie in [0, 1]")
        if np.any(np.diff(lv) <= 0):
            raise InvalidInputError("probability levels must be strictly increasing")
        if not np.all(np.isfinite(qv)):
            raise InvalidInputError("quantiles must be finite")
        if np.any(np.diff(qv) < 0):
            raise InvalidInputError("quantiles cross (must be nondecreasing in level)")

    def to_cdf(self, floor=0.0):
        return cdf_from_quantiles(self, floor=floor)


def cdf_from_quantiles(qf, floor=0.0):
    """Build a bounded CDF from quantile forecasts by linear interpolation.

    The lower bound sits below the first quantile by the gap between the
    first two quantiles, and is raised to ``floor`` if it would fall below it
    (``floor=None`` disables this, e.g. for outcomes that can be negative).
    The upper bound mirrors the rule above the last quantile.

    Parameters
    ----------
    qf : QuantileForecast
        Levels must lie strictly inside (0, 1).
    floor : float or None
        Lower clip for the extrapolated lower bound.  Never pushes the bound
        above the first quantile.

    Returns
    -------
    PiecewiseLinearCdf

    Raises
    ------
    DegenerateSupportError
        If every quantile is equal, leaving a zero-width support.
    """
    if not isinstance(qf, QuantileForecast):
        levels, quantiles = qf
        qf = QuantileForecast(levels, quantiles)
    levels = np.array(qf.levels)
    q = np.array(qf.quantiles)
    if levels[0] <= 0 or levels[-1] >= 1:
        raise InvalidInputError("levels must exclude 0 and 1")
    lb = q[0] - (q[1] - q[0])
    if floor is not None:
        lb = min(max(floor, lb), q[0])
    ub = q[-1] + (q[-1] - q[-2])
    if not ub > lb:
        raise DegenerateSupportError("all quantiles are equal; support has zero width")
    x = np.concatenate([[lb], q, [ub]])
    p = np.concatenate([[0.0], levels, [1.0]])
    return PiecewiseLinearCdf(x, p)


@dataclass(frozen=True)
class ScaledFrame:
    """Affine map sending ``[lo, hi]`` onto the unit interval."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not self.hi > self.lo:
            raise DegenerateSupportError(f"frame needs hi > lo, got [{self.lo}, {self.hi}]")

    @property
    def width(self):
        return self.hi - self.lo

    def scale(self, x):
        return (np.asarray(x, dtype=float) - self.lo) / self.width

    def unscale(self, u):
        return self.lo + np.asarray(u, dtype=float) * self.width

    @classmethod
    def for_cdfs(cls, cdfs):
        """Smallest frame containing every support."""
        lo = min(F.support[0] for F in cdfs)
        hi = max(F.support[1] for F in cdfs)
        return cls(float(lo), float(hi))


def _check_angle(theta_deg, lo=0.0, hi=90.0, lo_open=False):
    theta = float(theta_deg)
    if not math.isfinite(theta) or theta > hi or theta < lo or (lo_open and theta == lo):
        bracket = "(" if lo_open else "["
        raise InvalidAngleError(f"angle {theta_deg} outside {bracket}{lo:g}, {hi:g}]")
    return theta


def cos_sin(theta_deg):
    """Cosine and sine with the two right-angle cases exact."""
    if theta_deg == 0:
        return 1.0, 0.0
    if theta_deg == 90:
        return 0.0, 1.0
    r = math.radians(theta_deg)
    return math.cos(r), math.sin(r)


def cot(theta_deg):
    c, s = cos_sin(theta_deg)
    return c / s


@dataclass(frozen=True)
class AngledLine:
    """Line through ``(d, d)`` of the unit box with slope ``-tan(theta)``.

    In scaled coordinates the line is ``p*cos(theta) + x*sin(theta) = d*(cos(theta) + sin(theta))``,
    which covers the horizontal (0 degrees) and vertical (90 degrees) cases.
    """

    theta_deg: float
    anchor: float

    def __post_init__(self):
        _check_angle(self.theta_deg)
        if not 0.0 <= self.anchor <= 1.0:
            raise InvalidInputError(f"anchor {self.anchor} outside [0, 1]")

    @property
    def x_intercept(self):
        c, s = cos_sin(self.theta_deg)
        if s == 0:
            return math.inf
        return self.anchor * (c + s) / s

    def residual(self, x, p):
        c, s = cos_sin(self.theta_deg)
        return p * c + x * s - self.anchor * (c + s)


def intersect_scaled(xs, ps, theta_deg, d):
    """Vectorized intersection of scaled knots with the lines anchored at ``d``.

    The CDF is extended by ``p = 0`` to the left and ``p = 1`` to the right.
    Returns arrays ``(x, p)`` in scaled coordinates.
    """
    d = np.asarray(d, dtype=float)
    if theta_deg == 0:
        lo, hi = _lower_limit(d, ps, xs), _upper_limit(d, ps, xs)
        return 0.5 * (lo + hi), d.copy()
    if theta_deg == 90:
        lo, hi = _lower_limit(d, xs, ps), _upper_limit(d, xs, ps)
        return d.copy(), 0.5 * (lo + hi)
    c, s = cos_sin(theta_deg)
    key = (ps * c + xs * s) / (c + s)
    n = key.size
    j = np.searchsorted(key, d, side="left")
    jc = np.clip(j, 1, n - 1)
    k0, k1 = key[jc - 1], key[jc]
    t = (d - k0) / (k1 - k0)
    x = xs[jc - 1] + t * (xs[jc] - xs[jc - 1])
    p = ps[jc - 1] + t * (ps[jc] - ps[jc - 1])
    left = j == 0
    right = j == n
    x = np.where(left, d * (c + s) / s, x)
    p = np.where(left, 0.0, p)
    x = np.where(right, (d * (c + s) - c) / s, x)
    p = np.where(right, 1.0, p)
    return x, p


def intersect_line(cdf, line, frame):
    """Point where the angled line crosses the (flat-extended) CDF.

    Returns ``(x, p)`` with ``x`` in the original units of ``cdf``.
    """
    xs = frame.scale(cdf.x)
    x, p = intersect_scaled(xs, cdf.p, line.theta_deg, np.array([line.anchor]))
    return float(frame.unscale(x[0])), float(p[0])


def link_transform(cdf, theta_deg, frame=None, direction="forward"):
    """Shift each quantile by ``alpha / tan(theta)`` in scaled coordinates.

    ``direction="inverse"`` subtracts the shift.  The result is returned in
    the original units (through ``frame``, which defaults to the support).

    Raises
    ------
    NonMonotoneResultError
        If the inverse shift makes the quantile function decrease, meaning the
        input is not the forward image of any CDF.
    """
    theta = _check_angle(theta_deg, lo_open=True)
    if direction not in ("forward", "inverse"):
        raise InvalidInputError(f"direction must be 'forward' or 'inverse', not {direction!r}")
    if frame is None:
        frame = ScaledFrame(*cdf.support)
    xs = frame.scale(cdf.x)
    shift = cdf.p * cot(theta)
    xs = xs + shift if direction == "forward" else xs - shift
    return _from_scaled(xs, cdf.p, frame)


def _from_scaled(xs, ps, frame, tol=1e-10):
    dx = np.diff(xs)
    if np.any(dx < -tol):
        raise NonMonotoneResultError(
            f"transformed quantile function decreases by {-dx.min():.3g} in scaled units"
        )
    return PiecewiseLinearCdf(frame.unscale(np.maximum.accumulate(xs)), ps)


def moments(cdf):
    """Exact mean and variance from the piecewise-linear quantile function."""
    x, p = cdf.x, cdf.p
    w = np.diff(p)
    a, b = x[:-1], x[1:]
    mean = float(np.sum(w * (a + b)) / 2.0)
    ca, cb = a - mean, b - mean
    var = float(np.sum(w * (ca * ca + ca * cb + cb * cb)) / 3.0)
    return mean, max(var, 0.0)


def density_at(cdf, x):
    """Slope of the CDF at ``x``.

    Zero outside the support and across gaps.  Undefined at knots (including
    jump locations), where an error is raised.
    """
    xs, ps = cdf.x, cdf.p
    x = float(x)
    if x < xs[0] or x > xs[-1]:
        return 0.0
    j = int(np.searchsorted(xs, x, side="left"))
    if j < xs.size and xs[j] == x:
        raise UndefinedDensityError(f"density undefined at knot x={x!r}")
    return float((ps[j] - ps[j - 1]) / (xs[j] - xs[j - 1]))


def sup_distance(F, G):
    """Exact sup-norm distance between two CDFs, including jump limits."""
    grid = np.union1d(F.x, G.x)
    flo, fhi = F.cdf_limits(grid)
    glo, ghi = G.cdf_limits(grid)
    return float(max(np.max(np.abs(flo - glo)), np.max(np.abs(fhi - ghi))))

"""Randomized checks of the structural properties of the pooling methods.

Each suite draws random CDF sets from a seeded generator, measures the
worst violation of one property and compares it with a tolerance.
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .cdf import PiecewiseLinearCdf, ScaledFrame, cdf_from_quantiles, cos_sin, density_at, intersect_scaled, sup_distance
from .combine import (
    angular_combine_exact,
    angular_combine_grid,
    horizontal_combine,
    median_combine,
    vertical_combine,
)
from .scoring import crps

SUITES = ("mean", "variance", "crps", "median", "pdf", "limits")


@dataclass
class SuiteResult:
    """Outcome of one suite: worst residual against its tolerance."""

    name: str
    trials: int
    worst: float
    tol: float
    skipped: str = None

    @property
    def passed(self):
        return self.skipped is not None or self.worst <= self.tol

    def line(self):
        if self.skipped:
            return f"{self.name}: skipped: {self.skipped}"
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name}: {status} trials={self.trials} worst={self.worst:.3e} tol={self.tol:.1e}"


def random_cdf(rng, n=None, jumps=False, flats=False):
    """Random piecewise-linear CDF on a random interval.

    Centres lie in ``[-1, 1]`` and widths in ``[1, 3]``, so members of a set
    have comparable spread.  Knot spacings and probability increments are
    drawn from ``[0.5, 1.5]`` before normalization, which keeps slopes
    moderate.  ``jumps`` and ``flats`` occasionally insert a vertical or
    horizontal segment.
    """
    n = int(n or rng.integers(3, 9))
    centre = rng.uniform(-1.0, 1.0)
    width = rng.uniform(1.0, 3.0)
    dx = rng.uniform(0.5, 1.5, n - 1)
    dp = rng.uniform(0.5, 1.5, n - 1)
    if jumps and n > 3 and rng.random() < 0.5:
        dx[rng.integers(0, n - 1)] = 0.0
    if flats and n > 3 and rng.random() < 0.5:
        dp[rng.integers(0, n - 1)] = 0.0
    x = centre - width / 2 + width * np.concatenate([[0.0], np.cumsum(dx)]) / dx.sum()
    p = np.concatenate([[0.0], np.cumsum(dp)]) / dp.sum()
    return PiecewiseLinearCdf(x, p)


def random_set(rng, k=None, **kw):
    k = int(k or rng.integers(2, 6))
    return [random_cdf(rng, **kw) for _ in range(k)]


def gaussian_cdf(mean, sd, levels):
    """Gaussian discretized at ``levels`` with the usual tail extension."""
    levels = np.asarray(levels, dtype=float)
    return cdf_from_quantiles((levels, norm.ppf(levels, mean, sd)), floor=None)


def suite_mean(trials, rng):
    """Angular means equal the weighted average of member means."""
    worst = 0.0
    for _ in range(trials):
        cdfs = random_set(rng, jumps=True, flats=True)
        w = rng.dirichlet(np.ones(len(cdfs)))
        target = float(w @ [F.mean for F in cdfs])
        theta = int(rng.integers(1, 90))
        worst = max(worst, abs(angular_combine_exact(cdfs, theta, w).mean - target))
    return SuiteResult("mean", trials, worst, 1e-9)


def suite_variance(trials, rng):
    """Angular pools are no wider than the vertical pool."""
    worst = 0.0
    for _ in range(trials):
        cdfs = random_set(rng, jumps=True, flats=True)
        w = rng.dirichlet(np.ones(len(cdfs)))
        v = vertical_combine(cdfs, w).variance
        theta = int(rng.integers(1, 90))
        worst = max(worst, angular_combine_exact(cdfs, theta, w).variance - v)
    return SuiteResult("variance", trials, max(worst, 0.0), 1e-9)


def suite_crps(trials, rng):
    """CRPS of a pool never exceeds the weighted average member CRPS."""
    worst = 0.0
    for _ in range(trials):
        cdfs = random_set(rng, jumps=True, flats=True)
        w = rng.dirichlet(np.ones(len(cdfs)))
        lo = min(F.x[0] for F in cdfs)
        hi = max(F.x[-1] for F in cdfs)
        z = rng.uniform(lo - 0.5, hi + 0.5)
        method = rng.integers(0, 3)
        if method == 0:
            pool = vertical_combine(cdfs, w)
        elif method == 1:
            pool = horizontal_combine(cdfs, w)
        else:
            pool = angular_combine_exact(cdfs, int(rng.integers(1, 90)), w)
        bound = float(w @ [crps(F, z) for F in cdfs])
        worst = max(worst, crps(pool, z) - bound)
    return SuiteResult("crps", trials, max(worst, 0.0), 1e-9)


def suite_median(trials, rng, k=None, m=1001):
    """With an odd number of members, angular and vertical medians coincide."""
    if k is not None and k % 2 == 0:
        return SuiteResult("median", 0, 0.0, 2.0 / m, skipped="k must be odd")
    worst = 0.0
    for _ in range(trials):
        kk = int(k or rng.choice([3, 5, 7]))
        cdfs = random_set(rng, kk)
        v = median_combine(cdfs, "vertical")
        a = median_combine(cdfs, "angular", 45, m=m)
        worst = max(worst, sup_distance(v, a))
    return SuiteResult("median", trials, worst, 2.0 / m)


def member_intersections(cdfs, theta_deg, u, p, frame):
    """Scaled points where the angled line through ``(u, p)`` meets each member."""
    c, s = cos_sin(theta_deg)
    d = (p * c + u * s) / (c + s)
    pts = [intersect_scaled(F.scaled(frame).x, F.scaled(frame).p, theta_deg, d) for F in cdfs]
    return np.array([float(a) for a, _ in pts]), np.array([float(b) for _, b in pts])


def blend_formula(f, theta_deg, weights=None):
    """Angular-pool density from scaled member densities ``f`` at the intersections.

    The result is ``sum(w f/(f+t)) / sum(w/(f+t))`` with ``t = tan(theta)``.
    """
    f = np.asarray(f, dtype=float)
    c, s = cos_sin(theta_deg)
    t = s / c
    w = np.full(f.size, 1.0 / f.size) if weights is None else np.asarray(weights, dtype=float)
    return float(np.sum(w * f / (f + t)) / np.sum(w / (f + t)))


def blend_density(cdfs, theta_deg, u, p, frame, weights=None):
    """:func:`blend_formula` with the slopes of the piecewise-linear members."""
    ui, _ = member_intersections(cdfs, theta_deg, u, p, frame)
    f = [density_at(F.scaled(frame), a) for F, a in zip(cdfs, ui)]
    return blend_formula(f, theta_deg, weights)


def suite_pdf(trials, rng, m=10001, n_levels=2001, n_points=15, h=2e-3, tail=0.01):
    """Finite-difference density of the grid pool against the blend formula.

    Members are finely discretized Gaussians; the formula uses their smooth
    densities at the intersection points.  Points are interior: every member
    is met at a probability inside ``[tail, 1 - tail]``, away from the
    coarsely discretized tails.
    """
    levels = np.linspace(0.0, 1.0, n_levels + 2)[1:-1]
    worst = 0.0
    for _ in range(trials):
        means = rng.uniform(-0.3, 0.3, 2)
        sds = rng.uniform(0.08, 0.2, 2)
        cdfs = [gaussian_cdf(mu, sd, levels) for mu, sd in zip(means, sds)]
        theta = float(rng.uniform(10.0, 80.0))
        frame = ScaledFrame.for_cdfs(cdfs)
        pool = angular_combine_grid(cdfs, theta, m=m).scaled(frame)
        for u in np.linspace(0.2, 0.8, n_points):
            p = float(pool.cdf(u))
            ui, pi = member_intersections(cdfs, theta, u, p, frame)
            if pi.min() < tail or pi.max() > 1 - tail:
                continue
            fd = (pool.cdf(u + h) - pool.cdf(u - h)) / (2 * h)
            f = norm.pdf(frame.unscale(ui), means, sds) * frame.width
            ref = blend_formula(f, theta)
            worst = max(worst, abs(fd - ref) / ref)
    return SuiteResult("pdf", trials, worst, 1e-2)


def suite_limits(trials, rng, m=1001):
    """Grid route at 0 and 90 degrees and exact route against the grid route."""
    worst = 0.0
    for _ in range(trials):
        cdfs = random_set(rng)
        w = rng.dirichlet(np.ones(len(cdfs)))
        worst = max(worst, sup_distance(angular_combine_grid(cdfs, 0, w, m=m), horizontal_combine(cdfs, w)))
        worst = max(worst, sup_distance(angular_combine_grid(cdfs, 90, w, m=m), vertical_combine(cdfs, w)))
        for theta in (15, 45, 75):
            g = angular_combine_grid(cdfs, theta, w, m=m)
            worst = max(worst, sup_distance(g, angular_combine_exact(cdfs, theta, w)))
    return SuiteResult("limits", trials, worst, 2.0 / m)


_RUNNERS = {
    "mean": suite_mean,
    "variance": suite_variance,
    "crps": suite_crps,
    "median": suite_median,
    "pdf": suite_pdf,
    "limits": suite_limits,
}


def run_suites(suite="all", trials=100, seed=0, k=None):
    """Run one suite or all of them; each suite gets its own seeded stream."""
    names = SUITES if suite == "all" else (suite,)
    results = []
    for name in names:
        if name not in _RUNNERS:
            raise ValueError(f"unknown suite {name!r}")
        rng = np.random.default_rng([seed, SUITES.index(name)])
        if name == "median":
            results.append(suite_median(trials, rng, k=k))
        elif name == "pdf":
            results.append(suite_pdf(max(1, trials // 50), rng))
        else:
            results.append(_RUNNERS[name](trials, rng))
    return results

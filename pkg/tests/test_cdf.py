import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from angular_pool import (
    HUB_LEVELS,
    AngledLine,
    DegenerateSupportError,
    InvalidAngleError,
    InvalidInputError,
    NonMonotoneResultError,
    PiecewiseLinearCdf,
    QuantileForecast,
    ScaledFrame,
    UndefinedDensityError,
    cdf_from_quantiles,
    density_at,
    intersect_line,
    link_transform,
    sup_distance,
)
from angular_pool.cdf import cot, intersect_scaled
from angular_pool.verify import random_cdf

from .conftest import assert_valid_cdf


def hub_quantiles(first, second, second_last, last):
    """23 quantiles with prescribed outer pairs and a linear middle."""
    q = np.linspace(second, second_last, 21)
    return np.concatenate([[first], q, [last]])


@st.composite
def cdfs(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    jumps = draw(st.booleans())
    flats = draw(st.booleans())
    return random_cdf(np.random.default_rng(seed), jumps=jumps, flats=flats)


class TestConstruction:
    def test_bounds_extend_the_outer_gaps(self):
        F = cdf_from_quantiles((HUB_LEVELS, hub_quantiles(10, 13, 94, 100)))
        assert F.support == (7.0, 106.0)
        assert F.x[1] == 10 and F.p[1] == pytest.approx(0.01)

    def test_lower_bound_clipped_at_zero(self):
        F = cdf_from_quantiles((HUB_LEVELS, hub_quantiles(2, 6, 50, 60)))
        assert F.support[0] == 0.0

    def test_no_floor_allows_negative_support(self):
        F = cdf_from_quantiles((HUB_LEVELS, hub_quantiles(2, 6, 50, 60)), floor=None)
        assert F.support[0] == -2.0

    def test_equal_quantiles_rejected(self):
        with pytest.raises(DegenerateSupportError):
            cdf_from_quantiles((HUB_LEVELS, np.full(23, 5.0)))

    def test_repeated_quantile_becomes_jump(self):
        F = cdf_from_quantiles(([0.2, 0.4, 0.6, 0.8], [1.0, 2.0, 2.0, 3.0]))
        assert F.cdf(2.0, "lower") == pytest.approx(0.4)
        assert F.cdf(2.0, "upper") == pytest.approx(0.6)

    def test_crossing_quantiles_rejected(self):
        with pytest.raises(InvalidInputError):
            QuantileForecast((0.25, 0.5, 0.75), (1.0, 3.0, 2.0))

    def test_needs_two_levels(self):
        with pytest.raises(InvalidInputError):
            QuantileForecast((0.5,), (1.0,))

    def test_levels_must_increase(self):
        with pytest.raises(InvalidInputError):
            QuantileForecast((0.5, 0.25), (1.0, 2.0))

    def test_knot_validation(self):
        with pytest.raises(InvalidInputError):
            PiecewiseLinearCdf([0, 1], [0.2, 1])
        with pytest.raises(InvalidInputError):
            PiecewiseLinearCdf([1, 0], [0, 1])
        with pytest.raises(InvalidInputError):
            PiecewiseLinearCdf([0, 1, 2], [0, 0.6, 0.5])
        with pytest.raises(InvalidInputError):
            PiecewiseLinearCdf([0], [0])

    def test_knots_are_read_only(self, uniform):
        with pytest.raises(ValueError):
            uniform.x[0] = 3.0

    def test_json_round_trip(self):
        F = PiecewiseLinearCdf([0, 0.5, 0.5, 1], [0, 0.2, 0.8, 1])
        text = F.to_json()
        assert json.loads(text) == {"knots": [[0.0, 0.0], [0.5, 0.2], [0.5, 0.8], [1.0, 1.0]]}
        assert PiecewiseLinearCdf.from_json(text) == F

    def test_malformed_json(self):
        with pytest.raises(InvalidInputError):
            PiecewiseLinearCdf.from_json("{not json")
        with pytest.raises(InvalidInputError):
            PiecewiseLinearCdf.from_json('{"points": []}')


class TestEvaluation:
    def test_uniform(self, uniform):
        assert uniform.cdf(0.25) == 0.25

    def test_jump_midpoint(self):
        F = PiecewiseLinearCdf([0, 0.5, 0.5, 1], [0, 0.2, 0.8, 1])
        assert F.cdf(0.5) == pytest.approx(0.5)
        assert F.cdf(0.5, "lower") == pytest.approx(0.2)
        assert F.cdf(0.5, "upper") == pytest.approx(0.8)

    def test_outside_support(self, uniform):
        assert uniform.cdf(-1) == 0.0
        assert uniform.cdf(2) == 1.0

    def test_unknown_flat_rule(self, uniform):
        with pytest.raises(InvalidInputError):
            uniform.cdf(0.5, "nearest")

    def test_vectorized(self, uniform):
        np.testing.assert_allclose(uniform.cdf([-1, 0.3, 2]), [0, 0.3, 1])


class TestQuantile:
    def test_uniform(self, uniform):
        assert uniform.quantile(0.3) == pytest.approx(0.3)

    def test_interpolation(self):
        F = PiecewiseLinearCdf([0, 2, 4], [0, 0.5, 1])
        assert F.quantile(0.75) == 3.0
        assert F.quantile(1.0) == 4.0
        assert F.quantile(0.0) == 0.0

    def test_gap_uses_midpoint(self):
        F = PiecewiseLinearCdf([0, 1, 2, 3], [0, 0.5, 0.5, 1])
        assert F.quantile(0.5) == 1.5
        assert F.quantile(0.5, "lower") == 1.0

    def test_out_of_range(self, uniform):
        with pytest.raises(InvalidInputError):
            uniform.quantile(1.5)

    @settings(max_examples=60, deadline=None)
    @given(cdfs(), st.floats(0.001, 0.999))
    def test_round_trip(self, F, alpha):
        lo, hi = F.cdf_limits(F.quantile(alpha))
        assert lo - 1e-10 <= alpha <= hi + 1e-10


class TestMoments:
    def test_uniform(self, uniform):
        mean, var = uniform.moments()
        assert mean == pytest.approx(0.5)
        assert var == pytest.approx(1 / 12)

    def test_point_mass(self):
        F = PiecewiseLinearCdf([5, 5], [0, 1])
        assert F.mean == 5.0
        assert F.variance == 0.0

    def test_two_segments(self):
        assert PiecewiseLinearCdf([0, 1, 3], [0, 0.5, 1]).mean == pytest.approx(1.25)

    def test_against_monte_carlo(self, rng):
        F = PiecewiseLinearCdf([0, 1, 1, 3, 4], [0, 0.3, 0.5, 0.9, 1])
        draws = F.sample(10**6, rng)
        se_mean = draws.std() / 1e3
        assert abs(draws.mean() - F.mean) < 3 * se_mean
        se_var = np.sqrt(np.mean((draws - draws.mean()) ** 4) - draws.var() ** 2) / 1e3
        assert abs(draws.var() - F.variance) < 3 * se_var


class TestScaledFrame:
    def test_round_trip(self):
        frame = ScaledFrame(-3.0, 7.0)
        x = np.linspace(-5, 9, 11)
        np.testing.assert_allclose(frame.unscale(frame.scale(x)), x, rtol=1e-12)
        assert frame.scale(-3.0) == 0.0 and frame.scale(7.0) == 1.0

    def test_rejects_empty(self):
        with pytest.raises(DegenerateSupportError):
            ScaledFrame(1.0, 1.0)


class TestIntersection:
    frame = ScaledFrame(0.0, 1.0)

    @pytest.mark.parametrize("theta", [0, 10, 45, 80, 90])
    @pytest.mark.parametrize("d", [0.1, 0.5, 0.9])
    def test_diagonal_fixed_point(self, uniform, theta, d):
        x, p = intersect_line(uniform, AngledLine(theta, d), self.frame)
        assert (x, p) == pytest.approx((d, d))

    def test_steep_cdf(self):
        F = PiecewiseLinearCdf([0, 0.5], [0, 1])
        x, p = intersect_line(F, AngledLine(45, 0.5), self.frame)
        assert (x, p) == pytest.approx((1 / 3, 2 / 3))

    def test_crosses_inside_jump(self):
        F = PiecewiseLinearCdf([0, 0.5, 0.5, 1], [0, 0.0, 1.0, 1])
        x, p = intersect_line(F, AngledLine(60, 0.5), self.frame)
        assert (x, p) == pytest.approx((0.5, 0.5))

    def test_x_intercept(self):
        assert AngledLine(45, 0.4).x_intercept == pytest.approx(0.8)

    def test_invalid_angle(self):
        with pytest.raises(InvalidAngleError):
            AngledLine(120, 0.5)
        with pytest.raises(InvalidAngleError):
            AngledLine(-1, 0.5)

    def test_residuals_on_random_cases(self, rng):
        worst = 0.0
        for _ in range(1000):
            F = random_cdf(rng, jumps=True, flats=True)
            frame = ScaledFrame(*F.support)
            theta = rng.uniform(0.5, 89.5)
            d = rng.uniform()
            xs = frame.scale(F.x)
            x, p = intersect_scaled(xs, F.p, theta, np.array([d]))
            line = AngledLine(theta, d)
            worst = max(worst, abs(line.residual(x[0], p[0])))
            lo, hi = PiecewiseLinearCdf(xs, F.p).cdf_limits(x[0])
            gap = max(lo - p[0], p[0] - hi, 0.0)
            worst = max(worst, gap)
        assert worst <= 1e-10


class TestLinkTransform:
    def test_uniform_doubles(self, uniform):
        G = link_transform(uniform, 45)
        np.testing.assert_allclose(G.knots, [[0, 0], [2, 1]])
        assert G.mean == pytest.approx(1.0)

    def test_round_trip(self, rng):
        for _ in range(50):
            F = random_cdf(rng, jumps=True, flats=True)
            frame = ScaledFrame(*F.support)
            G = link_transform(link_transform(F, 30, frame), 30, frame, "inverse")
            np.testing.assert_allclose(G.x, F.x, atol=1e-12)
            np.testing.assert_array_equal(G.p, F.p)

    def test_identity_at_ninety(self, rng):
        F = random_cdf(rng)
        G = link_transform(F, 90)
        np.testing.assert_allclose(G.x, F.x, atol=1e-14)
        np.testing.assert_array_equal(G.p, F.p)

    def test_inverse_detects_non_image(self):
        F = PiecewiseLinearCdf([0, 0.01, 1], [0, 0.9, 1])
        with pytest.raises(NonMonotoneResultError):
            link_transform(F, 10, direction="inverse")

    def test_zero_angle_rejected(self, uniform):
        with pytest.raises(InvalidAngleError):
            link_transform(uniform, 0)

    @pytest.mark.parametrize("theta", [15, 45, 75])
    def test_moment_shifts(self, rng, theta):
        F = random_cdf(rng, flats=True)
        frame = ScaledFrame(*F.support)
        S = F.scaled(frame)
        G = link_transform(F, theta, frame).scaled(frame)
        t = cot(theta)
        assert G.mean - S.mean == pytest.approx(t / 2, abs=1e-12)
        # second moment shift: t * int x dF(x)^2 + t^2 / 3, by quadrature
        x = np.linspace(0.0, 1.0, 200001)
        F2 = S.cdf(x) ** 2
        xm = 0.5 * (x[1:] + x[:-1])
        integral = float(np.sum(xm * np.diff(F2)))
        second = lambda H: H.variance + H.mean**2  # noqa: E731
        assert second(G) - second(S) == pytest.approx(t * integral + t * t / 3, abs=1e-6)


class TestDensity:
    def test_uniform(self, uniform):
        assert density_at(uniform, 0.5) == 1.0

    def test_slope(self):
        assert density_at(PiecewiseLinearCdf([0, 2], [0, 1]), 1.0) == 0.5

    def test_jump_undefined(self):
        F = PiecewiseLinearCdf([0, 0.5, 0.5, 1], [0, 0.2, 0.8, 1])
        with pytest.raises(UndefinedDensityError):
            density_at(F, 0.5)

    def test_outside_support_is_zero(self, uniform):
        assert density_at(uniform, 3.0) == 0.0


class TestSupDistance:
    def test_zero_for_equal(self, uniform):
        assert sup_distance(uniform, uniform) == 0.0

    def test_sees_jumps(self):
        F = PiecewiseLinearCdf([0, 0.5, 0.5, 1], [0, 0.1, 0.9, 1])
        G = PiecewiseLinearCdf([0, 1], [0, 1])
        assert sup_distance(F, G) == pytest.approx(0.4)

    @settings(max_examples=40, deadline=None)
    @given(cdfs())
    def test_outputs_valid(self, F):
        assert_valid_cdf(F)

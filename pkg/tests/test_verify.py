import numpy as np
import pytest

from angular_pool.verify import SUITES, blend_formula, random_cdf, run_suites

from .conftest import assert_valid_cdf


class TestBlendFormula:
    def test_near_vertical_is_arithmetic_mean(self):
        assert blend_formula([1.0, 3.0], 89.9999) == pytest.approx(2.0, rel=1e-5)

    def test_near_horizontal_is_harmonic_mean(self):
        assert blend_formula([1.0, 3.0], 1e-6) == pytest.approx(1.5, rel=1e-5)

    def test_equal_densities(self):
        assert blend_formula([2.5, 2.5, 2.5], 37) == pytest.approx(2.5)


class TestRandomCdf:
    def test_valid(self, rng):
        for _ in range(200):
            assert_valid_cdf(random_cdf(rng, jumps=True, flats=True))


class TestRunSuites:
    def test_all_pass_and_reproduce(self):
        first = run_suites("all", trials=20, seed=5)
        assert [r.name for r in first] == list(SUITES)
        assert all(r.passed for r in first)
        assert [r.line() for r in run_suites("all", trials=20, seed=5)] == [r.line() for r in first]

    def test_suite_streams_are_independent(self):
        alone = run_suites("limits", trials=10, seed=2)[0]
        together = [r for r in run_suites("all", trials=10, seed=2) if r.name == "limits"][0]
        assert alone.worst == together.worst

    def test_unknown_suite(self):
        with pytest.raises(ValueError):
            run_suites("nope")

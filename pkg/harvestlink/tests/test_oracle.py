import math

import pytest

from harvestlink.Helpers.Exceptions import DomainError
from harvestlink.Helpers.HelperFunctions import build_system_params, db_to_linear
from harvestlink.Models.ChannelModel import LOG2_E, expected_log2_one_plus
from harvestlink.Models.DirectTransmission import DirectTransmission
from harvestlink.Models.Oracle import (
    grid_optimize_df,
    grid_optimize_dt,
    integrate_adaptive_simpson,
    quad_expected_log,
    scan_concavity,
    scan_monotonicity,
)


class TestQuadrature:
    def test_unit_scale(self):
        assert quad_expected_log(1.0, 1e-8) == pytest.approx(LOG2_E, abs=1e-8)

    @pytest.mark.parametrize("k", [0.01, 0.1, 0.25, 0.5, 0.999, 1.0, 1.001, 2.0, 10.0, 100.0])
    def test_matches_closed_form(self, k):
        assert abs(quad_expected_log(k, 1e-8) - expected_log2_one_plus(k)) <= 1e-6

    def test_tightening_tolerance(self):
        for k in (0.3, 5.0):
            assert abs(quad_expected_log(k, 1e-4) - quad_expected_log(k, 1e-8)) < 1e-4

    def test_polynomial_is_exact(self):
        value, _ = integrate_adaptive_simpson(lambda x: x**3 - x, 0.0, 2.0, 1e-12)
        assert value == pytest.approx(2.0, abs=1e-12)

    def test_rejects(self):
        with pytest.raises(DomainError):
            quad_expected_log(0.0)
        with pytest.raises(DomainError):
            quad_expected_log(1.0, tol=0.0)


class TestDirectGrid:
    @pytest.mark.parametrize("gamma_o_db", [-20.0, -15.0, -13.0, -10.0, -5.0, 0.0])
    @pytest.mark.parametrize("theta", [0.02, 0.05])
    def test_agrees_with_closed_form(self, gamma_o_db, theta):
        params = build_system_params(gamma_o=db_to_linear(gamma_o_db), theta=theta)
        n = 10_000
        alpha, value = grid_optimize_dt(params, n)
        optimum = DirectTransmission(params).optimize()
        assert abs(alpha - optimum["alpha_star"]) <= 1.0 / n
        assert abs(value - optimum["throughput"]) <= 1e-6

    def test_unconstrained(self):
        n = 2000
        alpha, _ = grid_optimize_dt(build_system_params(theta=None), n)
        assert abs(alpha - 0.5) <= 1.0 / n

    def test_refinement_is_monotone(self):
        for theta in (None, 0.02):
            params = build_system_params(theta=theta)
            assert grid_optimize_dt(params, 10_000)[1] >= grid_optimize_dt(params, 1_000)[1] - 1e-12

    def test_partial_efficiency(self):
        params = build_system_params(zeta=0.35, theta=0.05, gamma_o=db_to_linear(-15.0))
        alpha, value = grid_optimize_dt(params, 5_000)
        optimum = DirectTransmission(params).optimize()
        assert abs(alpha - optimum["alpha_star"]) <= 1.0 / 5_000 + 1e-6
        assert value <= optimum["throughput"] + 1e-12

    def test_rejects_small_grid(self, params):
        with pytest.raises(DomainError):
            grid_optimize_dt(params, 50)


class TestRelayGrid:
    def test_symmetric_placement(self, relay_params):
        n = 300
        alpha, beta, value, feasible = grid_optimize_df(relay_params, n)
        assert feasible
        assert abs(beta - (1.0 - alpha - beta)) <= 1.0 / n + 1e-12
        assert 0 < value < 2

    def test_infeasible(self):
        params = build_system_params(gamma_o=db_to_linear(60.0), theta=0.05)
        alpha, beta, value, feasible = grid_optimize_df(params, 150)
        assert not feasible
        assert math.isnan(value)

    def test_rejects_small_grid(self, params):
        with pytest.raises(DomainError):
            grid_optimize_df(params, 99)


class TestScanners:
    def test_convex_detected(self):
        assert scan_concavity(lambda x: x * x, -1.0, 1.0, n=50, h=1e-3) > 0

    def test_concave_passes(self):
        assert scan_concavity(math.log, 0.5, 3.0, n=50, h=1e-3) <= 1e-9

    def test_monotonicity(self):
        assert scan_monotonicity(math.exp, 0.0, 2.0) > 0
        assert scan_monotonicity(lambda x: -x, 0.0, 2.0) < 0
        assert scan_monotonicity(math.log, 1e-3, 1e3, log_grid=True) > 0

    def test_rejects(self):
        with pytest.raises(DomainError):
            scan_concavity(math.sin, 1.0, 0.0)
        with pytest.raises(DomainError):
            scan_monotonicity(math.sin, 0.0, 1.0, log_grid=True)

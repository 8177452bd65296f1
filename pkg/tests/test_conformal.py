"""
Tests for online conformal prediction with the discounted magnitude learner.

Key properties tested:
1. Radius losses: pinball subgradients and the skewed quadratic's convexity
2. The surrogate rule never fires on radius-loss subgradients
3. S*_t under lambda = 1 recovers the miscoverage gap times T
4. On a sudden-shift stream the discounted learner holds coverage near 1 - alpha
"""
import math
from typing import Callable

import numpy as np
import pytest

from discounted_oco.conformal import (
    AcpLearner,
    ConformalState,
    RadiusLossKind,
    acp_predict,
    acp_update,
    coverage_bound,
    coverage_bound_from_radius,
    coverage_metric_series,
    discounted_coverage_metric,
    pinball_loss,
    radius_loss,
    skewed_quadratic_loss,
)
from discounted_oco.exceptions import DomainError, InvariantViolation
from discounted_oco.harness.config import parse_config
from discounted_oco.harness.runner import run_experiment
from discounted_oco.metrics import conformal_statistics, coverage_metrics
from discounted_oco.schedules import DiscountSchedule


# =============================================================================
# Test Fixtures
# =============================================================================


@pytest.fixture
def radius_run(rng: np.random.Generator) -> Callable[..., tuple]:
    """Run an AcpLearner on folded-normal optimal radii; return (radii, r_star, g*)."""

    def run(T: int, lam: float, alpha: float = 0.1, discounted: bool = True) -> tuple:
        r_star = np.abs(rng.normal(0.5, 0.2, size=T))
        learner = AcpLearner("acp", discounted=discounted)
        radii, grads = np.empty(T), np.empty(T)
        for t in range(T):
            radii[t] = learner.predict()
            _, grads[t] = pinball_loss(radii[t], r_star[t], alpha)
            learner.update(grads[t], lam)
        return radii, r_star, grads

    return run


def _ocp_config(horizon: int, trials: int, learners: list) -> dict:
    return {
        "name": "coverage",
        "trials": trials,
        "seed": 20240501,
        "alpha": 0.1,
        "lce_window": 100,
        "schedule": {"kind": "constant", "lam": 0.999},
        "environment": {
            "kind": "quantile_shift",
            "horizon": horizon,
            "mode": "sudden",
            "shift_period": 500,
            "levels": [0.2, 0.5, 0.3, 0.7, 0.4, 0.8, 0.35, 0.6, 0.25, 0.75, 0.45, 0.65, 0.5],
            "noise_scale": 0.1,
        },
        "learners": learners,
    }


# =============================================================================
# Radius Loss Tests
# =============================================================================


class TestRadiusLosses:
    """Pinball and skewed quadratic losses."""

    def test_pinball_covered(self) -> None:
        value, grad = pinball_loss(2.0, 1.0, 0.1)
        assert value == pytest.approx(0.1)
        assert grad == pytest.approx(0.1)

    def test_pinball_missed(self) -> None:
        value, grad = pinball_loss(0.0, 1.0, 0.1)
        assert value == pytest.approx(0.9)
        assert grad == pytest.approx(-0.9)

    def test_pinball_tie_counts_as_miss(self) -> None:
        assert pinball_loss(1.0, 1.0, 0.1) == (0.0, pytest.approx(-0.9))

    def test_skewed_quadratic_values(self) -> None:
        assert skewed_quadratic_loss(1.0, 1.0, 0.1) == (0.0, 0.0)
        value, grad = skewed_quadratic_loss(3.0, 1.0, 0.1)
        assert grad == pytest.approx(0.2)
        assert value == pytest.approx(0.2)
        assert skewed_quadratic_loss(0.0, 1.0, 0.1)[1] == pytest.approx(-0.9)

    def test_skewed_quadratic_convex(self) -> None:
        """Gradients are nondecreasing in r."""
        grads = [skewed_quadratic_loss(r, 1.3, 0.2)[1] for r in np.linspace(0.0, 4.0, 401)]
        assert np.all(np.diff(grads) >= -1e-15)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 1.5])
    def test_alpha_range(self, alpha: float) -> None:
        with pytest.raises(DomainError):
            pinball_loss(0.5, 0.5, alpha)

    def test_dispatch(self) -> None:
        assert radius_loss(RadiusLossKind.PINBALL, 2.0, 1.0, 0.1) == pinball_loss(2.0, 1.0, 0.1)
        assert radius_loss("skewed_quadratic", 2.0, 1.0, 0.1) == skewed_quadratic_loss(2.0, 1.0, 0.1)


# =============================================================================
# Radius Learner Tests
# =============================================================================


class TestRadiusLearner:
    """Predictions and updates of the conformal radius learner."""

    def test_fresh_state_predicts_zero(self) -> None:
        assert acp_predict(ConformalState()) == 0.0

    def test_nonpositive_sum_predicts_zero(self) -> None:
        assert acp_predict(ConformalState(s_clip=0.0, v_clip=0.0, g_max=1.0)) == 0.0
        assert acp_predict(ConformalState(s_clip=-0.5, v_clip=1.0, g_max=1.0)) == 0.0

    def test_first_miss_sets_ceiling(self) -> None:
        state = acp_update(ConformalState(), -0.9, 0.999)
        assert (state.s_clip, state.v_clip) == (0.0, 0.0)
        assert state.g_max == 0.9

    def test_covered_round_lowers_sum(self) -> None:
        state = ConformalState(s_clip=5.0, v_clip=1.0, g_max=0.9)
        assert acp_predict(state) > 0
        nxt = acp_update(state, 0.1, 1.0)
        assert nxt.s_clip == pytest.approx(4.9)
        assert nxt.v_clip == pytest.approx(1.01)
        assert nxt.g_max == 0.9

    def test_positive_gradient_at_zero_radius_is_an_invariant_violation(self) -> None:
        with pytest.raises(InvariantViolation):
            acp_update(ConformalState(g_max=1.0), 0.1, 1.0)

    def test_pinball_ceiling(self) -> None:
        """g_max never exceeds max(alpha, 1 - alpha)."""
        learner = AcpLearner("acp")
        for r_star in np.abs(np.random.default_rng(3).normal(0.5, 0.3, size=2000)):
            _, g = pinball_loss(learner.predict(), r_star, 0.1)
            learner.update(g, 0.99)
            assert learner.state.g_max <= 0.9
            assert learner.predict() >= 0

    def test_undiscounted_ignores_schedule(self) -> None:
        assert AcpLearner("a", discounted=False).effective_lambda(0.5) == 1.0

    def test_snapshot(self) -> None:
        learner = AcpLearner("a")
        learner.update(-0.9, 0.99)
        assert learner.snapshot() == {"s_clip": 0.0, "v_clip": 0.0, "g_max": 0.9}


# =============================================================================
# Coverage Metric Tests
# =============================================================================


class TestCoverageMetric:
    """S*_t and its bounds."""

    def test_small_example(self) -> None:
        """g* = (-0.9, 0.1) with lambda = 0.5 gives 0.45 - 0.1."""
        value = discounted_coverage_metric([-0.9, 0.1], DiscountSchedule.constant(0.5), 2)
        assert value == pytest.approx(0.35)

    def test_zero_history(self) -> None:
        assert discounted_coverage_metric([0.0] * 5, DiscountSchedule.constant(0.9), 5) == 0.0

    def test_past_history(self) -> None:
        with pytest.raises(DomainError):
            discounted_coverage_metric([0.1], DiscountSchedule.unit(), 2)

    def test_series_matches_pointwise(self, rng: np.random.Generator) -> None:
        g = rng.choice([0.1, -0.9], size=50)
        series = coverage_metric_series(g, np.full(50, 0.9))
        schedule = DiscountSchedule.constant(0.9)
        for t in (1, 10, 50):
            assert series[t - 1] == pytest.approx(discounted_coverage_metric(g, schedule, t))

    def test_unit_discount_is_miscoverage_gap(self, radius_run: Callable) -> None:
        """|S*_T| / T = |miscoverage - alpha| when lambda = 1."""
        radii, r_star, grads = radius_run(2000, 1.0)
        miscoverage = float(np.mean(radii <= r_star))
        S = coverage_metric_series(grads, np.ones(2000))[-1]
        assert abs(S) / 2000 == pytest.approx(abs(miscoverage - 0.1), abs=1e-12)

    def test_bounds_are_monotone(self) -> None:
        assert coverage_bound(4.0, 1.0, 1.0) < coverage_bound(4.0, 1.0, 10.0)
        assert coverage_bound(4.0, 1.0, 1.0) < coverage_bound(9.0, 1.0, 1.0)
        assert coverage_bound_from_radius(4.0, 1.0, 1.0, clipped=True) < coverage_bound_from_radius(4.0, 1.0, 1.0)

    def test_bound_value(self) -> None:
        """D = 0 leaves 2 sqrt(V) + 15 G."""
        assert coverage_bound(4.0, 1.0, 0.0) == pytest.approx(19.0)

    def test_bounds_hold_along_runs(self, radius_run: Callable) -> None:
        for lam in (0.9, 0.99, 1.0):
            radii, r_star, grads = radius_run(3000, lam)
            lambdas = np.full(3000, lam)
            S = coverage_metric_series(grads, lambdas)
            # replay the clipped statistics the learner keeps
            s = v = m = 0.0
            for t in range(3000):
                bound = lam * m
                gc = min(max(grads[t], -bound), bound)
                s = lam * s - gc
                v = lam * lam * v + gc * gc
                m = max(bound, abs(grads[t]))
                assert abs(S[t]) <= coverage_bound(v, m, float(r_star[: t + 1].max())) * (1 + 1e-9)
                if t + 1 < 3000:
                    assert abs(S[t]) <= coverage_bound_from_radius(v, m, radii[t + 1]) * (1 + 1e-9)
                    clipped_bound = coverage_bound_from_radius(v, m, radii[t + 1], clipped=True)
                    assert abs(s) <= clipped_bound * (1 + 1e-9)


# =============================================================================
# Coverage Experiment Tests
# =============================================================================


class TestCoverageExperiment:
    """End-to-end runs on a sudden-shift stream."""

    def test_short_run_statistics(self) -> None:
        config = parse_config(_ocp_config(1500, 2, [{"id": "magl_d", "kind": "magl_d"}]))
        result = run_experiment(config, workers=2)
        assert result.all_passed
        for ledger in result.ledgers_for("magl_d"):
            stats = conformal_statistics(ledger)
            np.testing.assert_allclose(stats.s_star, coverage_metric_series(ledger.gradients()[:, 0], ledger.lambdas()))
            assert np.all(stats.g_max <= 0.9)

    @pytest.mark.slow
    def test_discounted_learner_tracks_coverage(self) -> None:
        learners = [{"id": "magl_d", "kind": "magl_d"}, {"id": "magl", "kind": "magl"}]
        result = run_experiment(parse_config(_ocp_config(6011, 10, learners)))
        assert result.all_passed
        discounted = [coverage_metrics(ledger, 100) for ledger in result.ledgers_for("magl_d")]
        assert 0.85 <= np.mean([r.avg_coverage for r in discounted]) <= 0.93
        assert np.mean([r.lce for r in discounted]) <= 0.15
        undiscounted = [coverage_metrics(ledger, 100) for ledger in result.ledgers_for("magl")]
        assert 0.85 <= np.mean([r.avg_coverage for r in undiscounted]) <= 0.93
        assert all(math.isfinite(r.avg_width) for r in discounted + undiscounted)

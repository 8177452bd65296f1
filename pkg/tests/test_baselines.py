"""
Tests for the OGD-family baselines and their regret guarantees.

Key properties tested:
1. Horizon-tuned and constant-learning-rate OGD stay within their bounds
2. Discounted AdaGrad stays within (3/2) D sqrt(V_T)
3. Discounted linear FTRL equals L2-regularized OGD with gamma = (1 - lambda) / eta
"""
import math
from typing import Callable

import numpy as np
import pytest

from discounted_oco.exceptions import DomainError, UsageError
from discounted_oco.learners.baselines import (
    Domain,
    L2OgdLearner,
    LinearFtrlLearner,
    OgdLearner,
    OgdRule,
    OgdState,
    adagrad_bound,
    constant_learning_rate,
    constant_lr_bound,
    constant_lr_horizon_bound,
    constant_lr_valid,
    horizon_bound,
    l2_regularized_ogd_step,
    linear_ftrl_step,
    ogd_step,
)
from discounted_oco.metrics import discounted_sum
from discounted_oco.schedules import DiscountSchedule, effective_horizon


# =============================================================================
# Test Fixtures
# =============================================================================

GRID = np.linspace(-1.0, 1.0, 11)


@pytest.fixture
def run_interval_ogd() -> Callable[..., np.ndarray]:
    """Run OGD on [-1, 1] over a scalar gradient stream; return the regret per grid point."""

    def run(g: np.ndarray, lam: float, rule: OgdRule) -> np.ndarray:
        state = OgdState(
            x=np.zeros(1), domain=Domain.interval(-1.0, 1.0), rule=rule, D=2.0, G=1.0,
            lam=lam if rule == OgdRule.CONSTANT_LR else None,
        )
        xs = np.empty(len(g))
        for t, gt in enumerate(g):
            xs[t] = state.x[0]
            state = ogd_step(state, [gt], lam)
        terms = g[:, None] * (xs[:, None] - GRID[None, :])
        return discounted_sum(terms, np.full(len(g), lam))

    return run


@pytest.fixture
def run_adagrad() -> Callable[..., tuple]:
    """Run discounted AdaGrad on [-1, 1]; return (regret per grid point, final V_T)."""

    def run(g: np.ndarray, lam: float) -> tuple:
        state = OgdState(x=np.zeros(1), domain=Domain.interval(-1.0, 1.0), D=2.0)
        xs = np.empty(len(g))
        for t, gt in enumerate(g):
            xs[t] = state.x[0]
            state = ogd_step(state, [gt], lam)
        terms = g[:, None] * (xs[:, None] - GRID[None, :])
        return discounted_sum(terms, np.full(len(g), lam)), state.moments.V

    return run


# =============================================================================
# Domain Tests
# =============================================================================


class TestDomain:
    def test_interval(self) -> None:
        domain = Domain.interval(-1.0, 1.0)
        assert domain.diameter() == 2.0
        np.testing.assert_array_equal(domain.project(np.array([3.0])), [1.0])

    def test_ball(self) -> None:
        domain = Domain.ball(2.0)
        np.testing.assert_allclose(domain.project(np.array([3.0, 4.0])), [1.2, 1.6])
        assert domain.contains(np.array([1.2, 1.6]))
        assert domain.diameter(2) == 4.0

    def test_nonnegative_start(self) -> None:
        np.testing.assert_array_equal(Domain.nonnegative().start(1), [0.0])

    def test_empty_interval(self) -> None:
        with pytest.raises(DomainError):
            Domain.interval(1.0, 0.0)


# =============================================================================
# Step Rule Tests
# =============================================================================


class TestOgdStep:
    """Single projected steps."""

    def test_constant_learning_rate(self) -> None:
        assert constant_learning_rate(2.0, 1.0, 0.6) == pytest.approx(1.6)

    def test_adagrad_first_step(self) -> None:
        """Unconstrained, D = 1, g = 0.5: V = 0.25 and x moves to -1."""
        state = ogd_step(OgdState(x=np.zeros(1), D=1.0), [0.5], 1.0)
        assert state.moments.V == pytest.approx(0.25)
        np.testing.assert_allclose(state.x, [-1.0])

    @pytest.mark.parametrize("rule", [OgdRule.ADAGRAD, OgdRule.HORIZON, OgdRule.SIMPLE])
    def test_projection_at_boundary(self, rule: OgdRule) -> None:
        """Starting at 0 on [0, 1] with g = 1 stays at 0."""
        state = OgdState(x=np.zeros(1), domain=Domain.interval(0.0, 1.0), rule=rule)
        np.testing.assert_array_equal(ogd_step(state, [1.0], 0.9).x, [0.0])

    def test_zero_variance_holds(self) -> None:
        state = ogd_step(OgdState(x=np.array([0.3])), [0.0], 1.0)
        np.testing.assert_array_equal(state.x, [0.3])

    def test_constant_lr_lambda_mismatch(self) -> None:
        state = OgdState(x=np.zeros(1), rule=OgdRule.CONSTANT_LR, lam=0.9)
        with pytest.raises(UsageError):
            ogd_step(state, [1.0], 0.8)

    def test_constant_lr_needs_lambda(self) -> None:
        with pytest.raises(DomainError):
            OgdState(x=np.zeros(1), rule=OgdRule.CONSTANT_LR)

    def test_simple_rule_ignores_discount(self) -> None:
        state = OgdState(x=np.zeros(1), rule=OgdRule.SIMPLE)
        for _ in range(3):
            state = ogd_step(state, [1.0], 0.5)
        assert state.moments.V == pytest.approx(3.0)

    def test_horizon_rate_follows_schedule(self) -> None:
        state = OgdState(x=np.zeros(1), rule=OgdRule.HORIZON, D=2.0, G=1.0)
        for _ in range(3):
            state = ogd_step(state, [0.1], 0.9)
        assert state.H == pytest.approx(effective_horizon(DiscountSchedule.constant(0.9), 3))
        assert state.learning_rate() == pytest.approx(2.0 / math.sqrt(state.H))


# =============================================================================
# Regret Bound Tests
# =============================================================================


class TestBounds:
    """Closed forms and measured regret."""

    def test_constant_lr_forms(self) -> None:
        assert constant_lr_bound(2.0, 1.0, 0.6) == pytest.approx(3.75)
        assert constant_lr_horizon_bound(1.0, 1.0, 1.0) == pytest.approx(1.5 / math.sqrt(1 - math.exp(-1)))
        assert constant_lr_valid(50, 0.99)
        assert not constant_lr_valid(49, 0.99)

    def test_adagrad_bound(self) -> None:
        assert adagrad_bound(2.0, 4.0) == 6.0
        assert horizon_bound(2.0, 1.0, 4.0) == 6.0

    @pytest.mark.parametrize("n_streams", [200, pytest.param(1000, marks=pytest.mark.slow)])
    def test_horizon_ogd_within_bound(
        self, n_streams: int, rng: np.random.Generator, run_interval_ogd: Callable
    ) -> None:
        T, lam = 500, 0.99
        bound = horizon_bound(2.0, 1.0, effective_horizon(DiscountSchedule.constant(lam), T))
        for _ in range(n_streams):
            regret = run_interval_ogd(rng.uniform(-1, 1, size=T), lam, OgdRule.HORIZON)
            assert np.all(regret <= bound * (1 + 1e-9))

    @pytest.mark.parametrize("n_streams", [200, pytest.param(1000, marks=pytest.mark.slow)])
    def test_constant_lr_within_bound(
        self, n_streams: int, rng: np.random.Generator, run_interval_ogd: Callable
    ) -> None:
        T, lam = 500, 0.99
        bound = constant_lr_bound(2.0, 1.0, lam)
        horizon_form = constant_lr_horizon_bound(2.0, 1.0, effective_horizon(DiscountSchedule.constant(lam), T))
        for _ in range(n_streams):
            regret = run_interval_ogd(rng.uniform(-1, 1, size=T), lam, OgdRule.CONSTANT_LR)
            assert np.all(regret <= bound * (1 + 1e-9))
            assert np.all(regret <= horizon_form * (1 + 1e-9))

    @pytest.mark.parametrize("n_streams", [200, pytest.param(1000, marks=pytest.mark.slow)])
    def test_adagrad_within_bound(
        self, n_streams: int, rng: np.random.Generator, run_adagrad: Callable
    ) -> None:
        """Same |g| <= 1 suite as the horizon-tuned test."""
        T, lam = 500, 0.99
        for _ in range(n_streams):
            regret, V = run_adagrad(rng.uniform(-1, 1, size=T), lam)
            assert np.all(regret <= adagrad_bound(2.0, V) * (1 + 1e-9))

    def test_adagrad_within_bound_mixed_scales(
        self, rng: np.random.Generator, run_adagrad: Callable
    ) -> None:
        T, lam = 500, 0.99
        for _ in range(100):
            g = rng.uniform(-1, 1, size=T) * rng.choice([0.01, 1.0, 10.0])
            regret, V = run_adagrad(g, lam)
            assert np.all(regret <= adagrad_bound(2.0, V) * (1 + 1e-9))


# =============================================================================
# FTRL / Regularized OGD Equivalence
# =============================================================================


class TestFtrlEquivalence:
    def test_closed_form(self) -> None:
        """Five steps of linear FTRL give x = -c sum lambda^(5-t) g_t."""
        g = np.array([1.0, -2.0, 0.5, 0.25, 3.0])
        lam, c = 0.8, 0.3
        total = np.zeros(1)
        for gt in g:
            total, x = linear_ftrl_step(total, [gt], lam, c)
        expected = -c * sum(lam ** (4 - i) * g[i] for i in range(5))
        assert x[0] == pytest.approx(expected)

    def test_single_step(self) -> None:
        _, x = linear_ftrl_step(np.zeros(1), [1.0], 0.9, 0.1)
        assert x[0] == pytest.approx(-0.1)

    def test_unit_discount_is_running_sum(self) -> None:
        total = np.zeros(2)
        for g in ([1.0, 0.0], [0.0, 2.0], [1.0, 1.0]):
            total, x = linear_ftrl_step(total, g, 1.0, 0.5)
        np.testing.assert_allclose(x, [-1.0, -1.5])

    def test_l2_step(self) -> None:
        np.testing.assert_allclose(l2_regularized_ogd_step([2.0], [1.0], 0.5, 0.2), [1.3])

    def test_matches_regularized_ogd(self, rng: np.random.Generator) -> None:
        """Same iterates over 100 random runs of 500 rounds."""
        for _ in range(100):
            lam = float(rng.uniform(0.5, 0.99))
            c = float(rng.uniform(0.01, 1.0))
            d = int(rng.integers(1, 4))
            ftrl = LinearFtrlLearner("f", d, c=c, lam=lam)
            ogd = L2OgdLearner("o", d, eta=c, gamma=(1.0 - lam) / c)
            for g in rng.normal(size=(500, d)):
                np.testing.assert_allclose(ftrl.predict(), ogd.predict(), rtol=1e-12, atol=1e-12)
                ftrl.update(g, lam)
                ogd.update(g, lam)

    def test_ftrl_rejects_other_lambda(self) -> None:
        with pytest.raises(UsageError):
            LinearFtrlLearner("f", 1, c=0.1, lam=0.9).update([1.0], 0.5)


class TestOgdLearner:
    def test_wrapper_matches_step(self, rng: np.random.Generator) -> None:
        domain = Domain.interval(-1.0, 1.0)
        learner = OgdLearner("o", 1, OgdRule.ADAGRAD, domain, D=2.0)
        state = OgdState(x=np.zeros(1), domain=domain, D=2.0)
        for g in rng.uniform(-1, 1, size=50):
            np.testing.assert_array_equal(learner.predict(), state.x)
            learner.update([g], 0.95)
            state = ogd_step(state, [g], 0.95)

    def test_simple_rule_is_undiscounted(self) -> None:
        learner = OgdLearner("s", 1, OgdRule.SIMPLE, Domain.nonnegative())
        assert learner.effective_lambda(0.5) == 1.0

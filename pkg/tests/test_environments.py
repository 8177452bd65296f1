"""
Tests for the synthetic streams and loss descriptors.
"""
import json
import math
from pathlib import Path

import numpy as np
import pytest

from discounted_oco.environments import (
    DistanceLoss,
    LinearLoss,
    PinballLoss,
    SkewedQuadraticLoss,
    build_stream,
    comparator_vector,
    dump_stream,
    loss_from_dict,
    loss_to_dict,
    make_rng,
    quantile_shift_stream,
    rademacher_stream,
    random_linear_stream,
)
from discounted_oco.exceptions import DomainError
from discounted_oco.learners.baselines import Domain, OgdLearner, OgdRule
from discounted_oco.learners.scalar import MagnitudeLearner, ScalarVariant
from discounted_oco.metrics import lower_bound_estimate
from discounted_oco.schedules import DiscountSchedule, effective_horizon, moments_history
from discounted_oco.utils.validation import StreamSpec


def _rademacher_spec(horizon: int, budget: float, comparator=(1.0,), seed: int = 0) -> StreamSpec:
    return StreamSpec(
        kind="rademacher", horizon=horizon, seed=seed, dim=len(comparator),
        comparator=list(comparator), variance_budget=budget,
    )


class TestLossDescriptors:
    def test_linear(self) -> None:
        loss = LinearLoss(g=(1.0, -2.0))
        assert loss.value([3.0, 1.0]) == 1.0
        np.testing.assert_array_equal(loss.gradient([0.0, 0.0]), [1.0, -2.0])

    def test_distance(self) -> None:
        loss = DistanceLoss(optimum=(0.0, 0.0), scale=2.0)
        assert loss.value([3.0, 4.0]) == 10.0
        np.testing.assert_allclose(loss.gradient([3.0, 4.0]), [1.2, 1.6])
        np.testing.assert_array_equal(loss.gradient([0.0, 0.0]), [0.0, 0.0])

    def test_radius_losses(self) -> None:
        assert PinballLoss(r_star=1.0, alpha=0.1).gradient(0.0)[0] == pytest.approx(-0.9)
        assert SkewedQuadraticLoss(r_star=1.0, alpha=0.1).gradient(3.0)[0] == pytest.approx(0.2)

    def test_serialized_forms(self) -> None:
        losses = [
            LinearLoss(g=(0.5,)),
            DistanceLoss(optimum=(1.0, 2.0), scale=0.5),
            PinballLoss(r_star=0.3, alpha=0.1),
            SkewedQuadraticLoss(r_star=0.3, alpha=0.2),
        ]
        for loss in losses:
            data = loss_to_dict(loss)
            assert data["kind"] == loss.kind
            assert loss_from_dict(data) == loss

    def test_unknown_kind(self) -> None:
        with pytest.raises(DomainError):
            loss_from_dict({"kind": "hinge"})


class TestRademacherStream:
    """Random-sign streams with a prescribed discounted variance."""

    def test_full_budget_gives_unit_gradients(self) -> None:
        schedule = DiscountSchedule.unit()
        grads = rademacher_stream(_rademacher_spec(50, 50.0), schedule)
        np.testing.assert_allclose(np.abs(grads), 1.0)

    def test_realized_variance_matches_budget(self, rng: np.random.Generator) -> None:
        for k in range(100):
            lam = float(rng.uniform(0.5, 1.0))
            T = int(rng.integers(1, 400))
            schedule = DiscountSchedule.constant(lam)
            H = effective_horizon(schedule, T)
            budget = float(rng.uniform(0.01, 1.0)) * H
            grads = rademacher_stream(_rademacher_spec(T, budget, (0.0, 2.0), seed=k), schedule)
            norms = np.linalg.norm(grads, axis=1)
            _, V, G = moments_history(norms, schedule.lambdas(T))
            assert V[-1] == pytest.approx(budget, rel=1e-12)
            assert np.all(grads[:, 0] == 0.0)

    def test_budget_out_of_range(self) -> None:
        with pytest.raises(DomainError):
            rademacher_stream(_rademacher_spec(10, 11.0), DiscountSchedule.unit())

    def test_deterministic(self) -> None:
        """Budget 5 lies inside (0, H_T] with H_T ~ 5.263 for lambda = 0.9, T = 100."""
        spec = _rademacher_spec(100, 5.0, seed=5)
        schedule = DiscountSchedule.constant(0.9)
        first = rademacher_stream(spec, schedule, 2)
        other = rademacher_stream(spec, schedule, 3)
        assert first.shape == other.shape == (100, 1)
        np.testing.assert_array_equal(first, rademacher_stream(spec, schedule, 2))
        assert not np.array_equal(first, other)

    @pytest.mark.slow
    @pytest.mark.parametrize(
        "factory",
        [
            lambda: OgdLearner("ogd", 1, OgdRule.HORIZON, Domain.interval(-1.0, 1.0), D=2.0, G=1.0),
            lambda: MagnitudeLearner("magl_d", ScalarVariant.DISCOUNTED),
        ],
        ids=["ogd_horizon", "magl_d"],
    )
    def test_lower_bound(self, factory) -> None:
        """Expected max(reg(u), reg(-u)) is at least sqrt(V/2) for any learner."""
        lam, T = 0.95, 50
        schedule = DiscountSchedule.constant(lam)
        V = effective_horizon(schedule, T)
        mean, stderr = lower_bound_estimate(
            factory, schedule, u=1.0, variance_budget=V, horizon=T, n_seeds=10_000,
        )
        assert mean >= math.sqrt(V / 2.0) - 2.0 * stderr

    def test_lower_bound_small(self) -> None:
        schedule = DiscountSchedule.constant(0.9)
        V = effective_horizon(schedule, 20)
        mean, stderr = lower_bound_estimate(
            lambda: OgdLearner("ogd", 1, OgdRule.HORIZON, Domain.interval(-1.0, 1.0), D=2.0, G=1.0),
            schedule, u=1.0, variance_budget=V, horizon=20, n_seeds=500,
        )
        assert stderr > 0
        assert mean > 0

    def test_lower_bound_magnitude_learner(self) -> None:
        """The magnitude learner also pays at least sqrt(V/2) on random signs."""
        schedule = DiscountSchedule.constant(0.95)
        V = effective_horizon(schedule, 50)
        mean, stderr = lower_bound_estimate(
            lambda: MagnitudeLearner("magl_d", ScalarVariant.DISCOUNTED),
            schedule, u=1.0, variance_budget=V, horizon=50, n_seeds=1000,
        )
        assert mean >= math.sqrt(V / 2.0) - 3.0 * stderr


class TestOtherStreams:
    def test_random_linear_bounded(self) -> None:
        spec = StreamSpec(kind="random_linear", horizon=1000, dim=3, gradient_bound=2.0, seed=1)
        grads = random_linear_stream(spec)
        assert grads.shape == (1000, 3)
        assert np.all(np.linalg.norm(grads, axis=1) <= 2.0 + 1e-12)

    def test_piecewise_cycles_segments(self) -> None:
        spec = StreamSpec(
            kind="piecewise_linear", horizon=7, dim=1,
            segments=[{"duration": 2, "optimum": [0.0]}, {"duration": 1, "optimum": [1.0], "gradient_bound": 3.0}],
        )
        stream = build_stream(spec, DiscountSchedule.unit())
        optima = [loss.optimum[0] for loss in stream.losses]
        assert optima == [0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0]
        assert stream.losses[2].scale == 3.0

    def test_sudden_levels(self) -> None:
        spec = StreamSpec(kind="quantile_shift", horizon=1200, shift_period=500, levels=[0.2, 0.7], noise_scale=0.0)
        stream = quantile_shift_stream(spec)
        np.testing.assert_array_equal(stream.r_star[:500], 0.2)
        np.testing.assert_array_equal(stream.r_star[500:1000], 0.7)
        np.testing.assert_array_equal(stream.r_star[1000:], 0.2)
        assert stream.hidden_ceiling == 0.7

    def test_gradual_levels_interpolate(self) -> None:
        spec = StreamSpec(
            kind="quantile_shift", horizon=100, shift_period=50, mode="gradual",
            levels=[0.0, 1.0], noise_scale=0.0,
        )
        stream = quantile_shift_stream(spec)
        assert stream.r_star[0] == 0.0
        assert stream.r_star[25] == pytest.approx(0.5)
        assert stream.r_star[50] == 1.0
        assert np.all(np.diff(stream.r_star[:50]) > 0)

    def test_drawn_levels_in_range(self) -> None:
        spec = StreamSpec(kind="quantile_shift", horizon=3000, level_range=(0.3, 0.6), noise_scale=0.0, seed=9)
        stream = quantile_shift_stream(spec)
        assert np.all((stream.r_star >= 0.3) & (stream.r_star <= 0.6))
        assert len(np.unique(stream.r_star)) == 6

    def test_noisy_radii_nonnegative(self) -> None:
        spec = StreamSpec(kind="quantile_shift", horizon=2000, levels=[0.05], noise_scale=0.5)
        stream = quantile_shift_stream(spec)
        assert np.all(stream.r_star >= 0)
        assert stream.hidden_ceiling == stream.r_star.max()

    def test_dump_stream(self, tmp_path: Path) -> None:
        spec = StreamSpec(kind="quantile_shift", horizon=10, levels=[0.5])
        path = dump_stream(quantile_shift_stream(spec), tmp_path / "stream.jsonl")
        lines = path.read_text().splitlines()
        assert len(lines) == 11
        header = json.loads(lines[0])
        assert header["spec"]["horizon"] == 10
        assert json.loads(lines[1])["t"] == 1

    def test_make_rng_keys(self) -> None:
        assert make_rng(1, 2).integers(1 << 30) == make_rng(1, 2).integers(1 << 30)
        assert make_rng(1, 2).integers(1 << 30) != make_rng(1, 3).integers(1 << 30)

    def test_comparator_vector(self) -> None:
        np.testing.assert_array_equal(comparator_vector(2.0, 3), [2.0, 2.0, 2.0])
        np.testing.assert_array_equal(comparator_vector([1.0, 2.0], 2), [1.0, 2.0])


class TestStreamSpecValidation:
    def test_rademacher_needs_budget(self) -> None:
        with pytest.raises(ValueError):
            StreamSpec(kind="rademacher", horizon=10, comparator=[1.0])

    def test_zero_comparator(self) -> None:
        with pytest.raises(ValueError):
            StreamSpec(kind="rademacher", horizon=10, comparator=[0.0], variance_budget=1.0)

    def test_unknown_field(self) -> None:
        with pytest.raises(ValueError):
            StreamSpec(kind="random_linear", horizon=10, colour="blue")

"""
Regret and coverage evaluation over run ledgers.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .conformal import coverage_metric_series
from .environments import comparator_vector, loss_from_dict, make_rng
from .exceptions import DomainError, UsageError
from .ledger import RunLedger
from .learners.base import OnlineLearner
from .schedules import DiscountSchedule, moments_history

logger = logging.getLogger(__name__)


class RegretMode(str, Enum):
    EXACT_LOSS = "exact_loss"
    LINEARIZED = "linearized"


def discounted_sum(terms, lambdas_prev: Sequence[float]) -> np.ndarray:
    """
    R_T for R_t = lambda_{t-1} R_{t-1} + terms_t, R_0 = 0.

    ``terms`` may carry trailing axes (e.g. one column per comparator); the
    result has the shape of a single row.
    """
    terms = np.asarray(terms, dtype=float)
    total = np.zeros(terms.shape[1:])
    for t in range(terms.shape[0]):
        total = lambdas_prev[t] * total + terms[t]
    return total


def discounted_sum_series(terms, lambdas_prev: Sequence[float]) -> np.ndarray:
    """Every partial R_1..R_T of discounted_sum"""
    terms = np.asarray(terms, dtype=float)
    out = np.empty_like(terms)
    total = np.zeros(terms.shape[1:])
    for t in range(terms.shape[0]):
        total = lambdas_prev[t] * total + terms[t]
        out[t] = total
    return out


def _comparator(ledger: RunLedger, u) -> np.ndarray:
    return comparator_vector(u, ledger.meta.dim)


def _losses(ledger: RunLedger):
    if any(r.loss is None for r in ledger.rounds):
        raise UsageError(f"Ledger {ledger.meta.learner_id} has no recorded losses")
    return [loss_from_dict(r.loss) for r in ledger.rounds]


def regret_terms(ledger: RunLedger, u, mode: RegretMode = RegretMode.EXACT_LOSS) -> np.ndarray:
    """Per-round l_t(x_t) - l_t(u), or <g_t, x_t - u> in linearized mode"""
    u = _comparator(ledger, u)
    if RegretMode(mode) == RegretMode.LINEARIZED:
        return np.einsum("td,td->t", ledger.gradients(), ledger.predictions() - u[None, :])
    losses = _losses(ledger)
    return np.array(
        [loss.value(r.prediction) - loss.value(u) for loss, r in zip(losses, ledger.rounds)]
    )


def discounted_regret(ledger: RunLedger, u, mode: RegretMode = RegretMode.EXACT_LOSS) -> float:
    """
    Discounted regret against comparator u.

    Raises:
        UsageError: in exact mode when the ledger carries no losses
    """
    return float(discounted_sum(regret_terms(ledger, u, mode), ledger.lambdas()))


def comparator_window_loss(ledger: RunLedger, u) -> float:
    """
    Exponentially weighted average of l_t(u) with weights prod_{i=t}^{T-1} lambda_i.
    """
    u = _comparator(ledger, u)
    losses = _losses(ledger)
    lam = ledger.lambdas()
    num = den = 0.0
    for t, loss in enumerate(losses):
        num = lam[t] * num + loss.value(u)
        den = lam[t] * den + 1.0
    return num / den


def ledger_moments(ledger: RunLedger) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(H, V, G) histories of the raw gradients under the recorded discounts"""
    g_norms = np.linalg.norm(ledger.gradients(), axis=1)
    return moments_history(g_norms, ledger.lambdas())


# Coverage


@dataclass
class CoverageReport:
    avg_coverage: float
    local_coverage: np.ndarray
    avg_width: float
    local_width: np.ndarray
    lce: float
    best_fixed_local_width: np.ndarray
    window: int


def local_means(values: np.ndarray, k: int) -> np.ndarray:
    """Forward-window means over t..t+k-1, for t = 1..T-k+1"""
    csum = np.concatenate([[0.0], np.cumsum(values, dtype=float)])
    return (csum[k:] - csum[:-k]) / k


def coverage_metrics(ledger: RunLedger, k: int, alpha: Optional[float] = None) -> CoverageReport:
    """
    Coverage, width and LCE_k of a conformal run.

    Width is the radius itself.

    Raises:
        DomainError: if k is not in [1, T]
    """
    T = ledger.horizon
    if not 1 <= k <= T:
        raise DomainError(f"Window {k} outside [1, {T}]")
    alpha = ledger.meta.alpha if alpha is None else alpha
    if alpha is None:
        raise UsageError("coverage_metrics needs alpha")
    err = ledger.errs()
    width = ledger.predictions()[:, 0]
    local_err = local_means(err, k)
    windows = sliding_window_view(ledger.r_stars(), k)
    return CoverageReport(
        avg_coverage=float(1.0 - err.mean()),
        local_coverage=1.0 - local_err,
        avg_width=float(width.mean()),
        local_width=local_means(width, k),
        lce=float(np.max(np.abs(alpha - local_err))),
        best_fixed_local_width=np.quantile(windows, 1.0 - alpha, axis=1),
        window=k,
    )


def local_series(ledger: RunLedger, k: int, alpha: Optional[float] = None) -> Dict[str, np.ndarray]:
    """Plot-ready columns t, local coverage, local width and best fixed local width"""
    report = coverage_metrics(ledger, k, alpha)
    n = report.local_coverage.shape[0]
    return {
        "t": np.arange(1, n + 1),
        "local_coverage": report.local_coverage,
        "local_width": report.local_width,
        "best_fixed_local_width": report.best_fixed_local_width,
    }


@dataclass
class ConformalStatistics:
    """Per-round coverage metric and clipped statistics replayed from a ledger"""
    s_star: np.ndarray
    s_clip: np.ndarray
    v_clip: np.ndarray
    g_max: np.ndarray


def conformal_statistics(ledger: RunLedger) -> ConformalStatistics:
    """Replay the clipped sums the radius learner maintains"""
    g = ledger.gradients()[:, 0]
    lam = ledger.lambdas()
    T = g.shape[0]
    s_clip, v_clip, g_max = np.empty(T), np.empty(T), np.empty(T)
    s = v = m = 0.0
    for t in range(T):
        bound = lam[t] * m
        gc = min(max(g[t], -bound), bound)
        s = lam[t] * s - gc
        v = lam[t] * lam[t] * v + gc * gc
        m = max(bound, abs(g[t]))
        s_clip[t], v_clip[t], g_max[t] = s, v, m
    return ConformalStatistics(
        s_star=coverage_metric_series(g, lam), s_clip=s_clip, v_clip=v_clip, g_max=g_max
    )


# Monte-Carlo lower bound


def lower_bound_estimate(
    learner_factory: Callable[[], OnlineLearner],
    schedule: DiscountSchedule,
    u: Union[float, Sequence[float]],
    variance_budget: float,
    horizon: int,
    n_seeds: int,
    base_seed: int = 0,
) -> Tuple[float, float]:
    """
    Monte-Carlo estimate of E[max(reg(u), reg(-u))] on random-sign streams.

    Each seed draws g_t = L eps_t u/||u|| with L = sqrt(V / H_T), runs a fresh
    learner and takes the larger of the two discounted regrets.

    Returns:
        (mean, standard error)
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    direction = u / np.linalg.norm(u)
    lam = schedule.lambdas(horizon)
    H, _, _ = moments_history(np.ones(horizon), lam)
    L = math.sqrt(variance_budget / H[-1])
    samples = np.empty(n_seeds)
    for seed in range(n_seeds):
        signs = make_rng(base_seed, seed).integers(0, 2, size=horizon) * 2 - 1
        learner = learner_factory()
        plus = minus = 0.0
        for t in range(horizon):
            x = np.atleast_1d(np.asarray(learner.predict(), dtype=float))
            g = L * signs[t] * direction
            learner.update(g, lam[t])
            plus = lam[t] * plus + float(g @ (x - u))
            minus = lam[t] * minus + float(g @ (x + u))
        samples[seed] = max(plus, minus)
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(n_seeds))


# Runtime


def runtime_summary(
    step_times: Dict[str, List[float]], reference: Optional[str] = None
) -> Dict[str, Dict[str, float]]:
    """
    Mean and standard deviation of per-step wall time, per learner.

    Args:
        step_times: learner id -> mean step time (seconds) of each trial
        reference: learner id whose mean normalizes the rest

    Returns:
        learner id -> {"mean", "std", "normalized"}
    """
    out: Dict[str, Dict[str, float]] = {}
    ref_mean = None
    if reference is not None and step_times.get(reference):
        ref_mean = float(np.mean(step_times[reference]))
    for learner_id, times in step_times.items():
        arr = np.asarray(times, dtype=float)
        mean = float(arr.mean()) if arr.size else math.nan
        std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        out[learner_id] = {
            "mean": mean,
            "std": std,
            "normalized": mean / ref_mean if ref_mean else math.nan,
        }
    return out

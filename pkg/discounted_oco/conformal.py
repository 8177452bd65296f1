"""
Online conformal prediction with the discounted magnitude learner.

The radius learner is the discounted magnitude learner run on radius-loss
subgradients. Its surrogate rule can never fire here (the subgradient at a
zero radius is never positive), so it is compiled to an invariant check.
"""
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from .exceptions import DomainError
from .learners import scalar
from .learners.base import OnlineLearner
from .learners.scalar import ScalarLearnerState, ScalarVariant
from .schedules import DiscountSchedule
from .settings import DISCOUNTED_OCO_DEFAULT_EPS

logger = logging.getLogger(__name__)


class RadiusLossKind(str, Enum):
    PINBALL = "pinball"
    SKEWED_QUADRATIC = "skewed_quadratic"


def _check_loss_args(r: float, r_star: float, alpha: float):
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not (math.isfinite(r) and math.isfinite(r_star)):
        raise DomainError(f"Radius arguments must be finite, got r={r}, r_star={r_star}")


def pinball_loss(r: float, r_star: float, alpha: float) -> Tuple[float, float]:
    """
    Pinball loss of radius r against the optimal radius r_star.

    Returns:
        (value, subgradient); the subgradient is alpha if r > r_star else alpha - 1
    """
    _check_loss_args(r, r_star, alpha)
    if r > r_star:
        return alpha * (r - r_star), alpha
    return (alpha - 1.0) * (r - r_star), alpha - 1.0


def skewed_quadratic_loss(r: float, r_star: float, alpha: float) -> Tuple[float, float]:
    """
    Asymmetric quadratic 0.5 * |alpha - 1[r <= r_star]| * (r - r_star)^2.

    Convex, minimized at r_star and not globally Lipschitz. The gradient is
    alpha (r - r_star) above r_star and (1 - alpha)(r - r_star) at or below it.
    """
    _check_loss_args(r, r_star, alpha)
    weight = abs(alpha - (1.0 if r <= r_star else 0.0))
    diff = r - r_star
    return 0.5 * weight * diff * diff, weight * diff


_LOSSES = {
    RadiusLossKind.PINBALL: pinball_loss,
    RadiusLossKind.SKEWED_QUADRATIC: skewed_quadratic_loss,
}


def radius_loss(kind: RadiusLossKind, r: float, r_star: float, alpha: float) -> Tuple[float, float]:
    return _LOSSES[RadiusLossKind(kind)](r, r_star, alpha)


@dataclass(frozen=True)
class ConformalState:
    s_clip: float = 0.0
    v_clip: float = 0.0
    g_max: float = 0.0
    eps: float = DISCOUNTED_OCO_DEFAULT_EPS

    def as_scalar(self) -> ScalarLearnerState:
        return ScalarLearnerState(
            v=self.v_clip, s=self.s_clip, h=self.g_max, eps=self.eps,
            variant=ScalarVariant.DISCOUNTED,
        )


def acp_predict(state: ConformalState) -> float:
    """Radius prediction; zero while g_max is zero or s_clip <= 0"""
    r, _ = scalar.predict(state.as_scalar())
    return r


def acp_update(state: ConformalState, g_star: float, lambda_prev: float) -> ConformalState:
    """
    Fold one radius-loss subgradient into the clipped statistics.

    Raises:
        DomainError: on a non-finite subgradient
        InvariantViolation: if the surrogate rule would fire
    """
    new, _ = scalar.update(state.as_scalar(), g_star, lambda_prev, forbid_surrogate=True)
    return replace(state, s_clip=new.s, v_clip=new.v, g_max=new.h)


def discounted_coverage_metric(
    g_history: Sequence[float], schedule: DiscountSchedule, t: int
) -> float:
    """
    S*_t = -sum_i (prod_{j=i}^{t-1} lambda_j) g*_i, via S' = lambda S - g*.

    Raises:
        DomainError: if t exceeds the history
    """
    if t > len(g_history):
        raise DomainError(f"Round {t} past a history of length {len(g_history)}")
    total = 0.0
    for i in range(t):
        total = schedule.value(i) * total - float(g_history[i])
    return total


def coverage_metric_series(g_history: Sequence[float], lambdas_prev: Sequence[float]) -> np.ndarray:
    """S*_t for t = 1..T, given the recorded lambda_{t-1}"""
    out = np.empty(len(g_history))
    total = 0.0
    for i, (g, lam) in enumerate(zip(g_history, lambdas_prev)):
        total = lam * total - g
        out[i] = total
    return out


def _coverage_log_term(radius: float, eps: float) -> float:
    return 1.0 + math.sqrt(math.log(1.0 + 2.0 * radius / eps))


def coverage_bound(v_clip: float, g_max: float, D: float, eps: float = DISCOUNTED_OCO_DEFAULT_EPS) -> float:
    """
    Bound on |S*_T| when every optimal radius is at most D.

    2 sqrt(V_clip) L + 15 G L^2 with L = 1 + sqrt(log(1 + 2D/eps)).
    """
    L = _coverage_log_term(D, eps)
    return 2.0 * math.sqrt(v_clip) * L + 15.0 * g_max * L * L


def coverage_bound_from_radius(
    v_clip: float,
    g_max: float,
    r_next: float,
    eps: float = DISCOUNTED_OCO_DEFAULT_EPS,
    clipped: bool = False,
) -> float:
    """
    Data-dependent form with the next radius r_{t+1} in place of D.

    Bounds |S*_t| with constant 14, or the clipped sum |S*_{t,clip}| with 13.
    """
    L = _coverage_log_term(r_next, eps)
    return 2.0 * math.sqrt(v_clip) * L + (13.0 if clipped else 14.0) * g_max * L * L


class AcpLearner(OnlineLearner):
    """
    Radius learner for online conformal prediction.

    With ``discounted=False`` the schedule is ignored (lambda = 1).
    """

    def __init__(self, learner_id: str, eps: float = DISCOUNTED_OCO_DEFAULT_EPS, discounted: bool = True):
        super().__init__(learner_id, dim=1)
        self.discounted = discounted
        self.state = ConformalState(eps=eps)

    def predict(self) -> float:
        return acp_predict(self.state)

    def update(self, g, lambda_prev: float):
        g_star = float(np.asarray(g).reshape(-1)[0])
        self.state = acp_update(self.state, g_star, self.effective_lambda(lambda_prev))

    def snapshot(self) -> Dict[str, Any]:
        return {
            "s_clip": self.state.s_clip,
            "v_clip": self.state.v_clip,
            "g_max": self.state.g_max,
        }

"""
One-dimensional FTRL magnitude learners on [0, inf).

Four variants share one prediction rule and one update:

- discounted: clipped, discounted statistics with a running Lipschitz hint
- undiscounted: the same with lambda forced to 1
- magdis: no clipping and no hint, v starts strictly positive
- hinted: no clipping, the hint is supplied by the caller (used inside the
  vector learner)
"""
import logging
import math
from dataclasses import asdict, dataclass, replace
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import DomainError, InvariantViolation, UsageError
from ..schedules import moments_history
from ..settings import DISCOUNTED_OCO_DEFAULT_EPS, DISCOUNTED_OCO_MAGDIS_V_INIT
from ..utils.special_math import erfi_with_flag, stable_exp
from .base import OnlineLearner

logger = logging.getLogger(__name__)

# Slack on the s >= -h invariant for accumulated rounding
_INVARIANT_RTOL = 1e-9


class ScalarVariant(str, Enum):
    DISCOUNTED = "discounted"
    UNDISCOUNTED = "undiscounted"
    MAGDIS = "magdis"
    HINTED = "hinted"


@dataclass(frozen=True)
class ScalarLearnerState:
    v: float = 0.0
    s: float = 0.0
    h: float = 0.0
    eps: float = DISCOUNTED_OCO_DEFAULT_EPS
    variant: ScalarVariant = ScalarVariant.DISCOUNTED

    def __post_init__(self):
        object.__setattr__(self, "variant", ScalarVariant(self.variant))
        if self.eps <= 0:
            raise DomainError(f"eps must be positive, got {self.eps}")
        if self.v < 0 or self.h < 0:
            raise DomainError(f"v and h must be nonnegative, got v={self.v}, h={self.h}")
        if self.variant == ScalarVariant.MAGDIS and self.v <= 0:
            raise DomainError("magdis state requires v > 0")

    @classmethod
    def initial(
        cls,
        variant: ScalarVariant = ScalarVariant.DISCOUNTED,
        eps: float = DISCOUNTED_OCO_DEFAULT_EPS,
        v_init: float = DISCOUNTED_OCO_MAGDIS_V_INIT,
    ) -> "ScalarLearnerState":
        variant = ScalarVariant(variant)
        v = v_init if variant == ScalarVariant.MAGDIS else 0.0
        return cls(v=v, s=0.0, h=0.0, eps=eps, variant=variant)


@dataclass(frozen=True)
class ScalarUpdateRecord:
    g: float
    g_clip: float
    g_tilde: float
    x_unprojected: float
    x: float
    lambda_prev: float


def _predict(state: ScalarLearnerState) -> Tuple[float, float, bool]:
    eps = state.eps
    if state.variant == ScalarVariant.MAGDIS:
        value, saturated = erfi_with_flag(state.s / (2.0 * math.sqrt(state.v)))
        x_tilde = eps * value
        return max(x_tilde, 0.0), x_tilde, saturated
    if state.h == 0.0:
        return 0.0, 0.0, False
    radicand = state.v + 2.0 * state.h * state.s + 16.0 * state.h * state.h
    if radicand <= 0:
        raise InvariantViolation(f"Nonpositive radicand {radicand} in {state}")
    root = math.sqrt(radicand)
    z = state.s / (2.0 * root)
    value, sat_erfi = erfi_with_flag(z)
    ez, sat_exp = stable_exp(z * z)
    x_tilde = eps * value - eps * state.h / root * ez
    return max(x_tilde, 0.0), x_tilde, sat_erfi or sat_exp


def predict_with_flag(state: ScalarLearnerState) -> Tuple[float, float, bool]:
    """
    Like predict, with a third element set when the exponent clamp was hit.
    """
    return _predict(state)


def predict(state: ScalarLearnerState) -> Tuple[float, float]:
    """
    Magnitude prediction.

    Args:
        state: Learner state

    Returns:
        Tuple (x, x_unprojected) with x = max(x_unprojected, 0)
    """
    x, x_tilde, saturated = _predict(state)
    if saturated:
        logger.warning("Magnitude prediction saturated the exponent clamp: %s", state)
    return x, x_tilde


def update(
    state: ScalarLearnerState,
    g: float,
    lambda_prev: float,
    hint_override: Optional[float] = None,
    *,
    forbid_surrogate: bool = False,
    prediction: Optional[Tuple[float, float]] = None,
) -> Tuple[ScalarLearnerState, ScalarUpdateRecord]:
    """
    Advance the learner by one round.

    Args:
        state: Current state
        g: Gradient of the round's loss at the current prediction
        lambda_prev: Discount factor for this round (ignored by the undiscounted variant)
        hint_override: Next Lipschitz hint, required by and only legal for the hinted variant
        forbid_surrogate: Raise instead of zeroing the gradient when the surrogate rule fires
        prediction: (x, x_unprojected) already computed for ``state``

    Returns:
        Tuple of (new state, update record)

    Raises:
        DomainError: on a non-finite gradient or a nonpositive lambda
        UsageError: on a misuse of hint_override
        InvariantViolation: if forbid_surrogate is set and the surrogate rule fires
    """
    g = float(g)
    if not math.isfinite(g):
        raise DomainError(f"Gradient must be finite, got {g}")
    if not math.isfinite(lambda_prev) or lambda_prev <= 0:
        raise DomainError(f"Discount factor must lie in (0, inf), got {lambda_prev}")
    variant = state.variant
    if variant == ScalarVariant.HINTED:
        if hint_override is None:
            raise UsageError("The hinted variant needs hint_override on every update")
        if not math.isfinite(hint_override) or hint_override < 0:
            raise DomainError(f"Hint must be finite and >= 0, got {hint_override}")
    elif hint_override is not None:
        raise UsageError(f"hint_override is only legal for the hinted variant, not {variant.value}")

    lam = 1.0 if variant == ScalarVariant.UNDISCOUNTED else float(lambda_prev)
    x, x_tilde = prediction if prediction is not None else predict(state)

    if variant in (ScalarVariant.DISCOUNTED, ScalarVariant.UNDISCOUNTED):
        bound = lam * state.h
        g_clip = min(max(g, -bound), bound)
        h_next = max(bound, abs(g))
    elif variant == ScalarVariant.HINTED:
        g_clip = g
        h_next = float(hint_override)
    else:
        g_clip = g
        h_next = 0.0

    if g_clip * x_tilde < g_clip * x:
        if forbid_surrogate:
            raise InvariantViolation(
                f"Surrogate rule fired: g_clip={g_clip}, x_unprojected={x_tilde}, x={x}"
            )
        g_tilde = 0.0
    else:
        g_tilde = g_clip

    new_state = replace(
        state,
        v=lam * lam * state.v + g_tilde * g_tilde,
        s=lam * state.s - g_tilde,
        h=h_next,
    )
    if variant != ScalarVariant.MAGDIS and new_state.s < -new_state.h * (1.0 + _INVARIANT_RTOL):
        raise InvariantViolation(f"s fell below -h: {new_state}")
    record = ScalarUpdateRecord(
        g=g, g_clip=g_clip, g_tilde=g_tilde, x_unprojected=x_tilde, x=x, lambda_prev=lam
    )
    return new_state, record


def _log_term(u: float, eps: float) -> float:
    return 1.0 + math.sqrt(math.log(2.0 * u / eps + 1.0))


def magnitude_regret_bound(
    V: float,
    G: float,
    u: float,
    eps: float,
    forgetting: float = 0.0,
    max_x_recent: float = 0.0,
    max_x_old: float = 0.0,
    G_old: float = 0.0,
) -> float:
    """
    Discounted regret bound of the discounted magnitude learner against u >= 0.

    eps*sqrt(V + 2GS + 16G^2) + u(S + G) + max_x_recent*G + forgetting*max_x_old*G_old
    with S = 8G*L^2 + 2*sqrt(V + 16G^2)*L and L = 1 + sqrt(log(2u/eps + 1)).

    Args:
        V: Discounted variance of the raw gradients at the horizon
        G: Discounted Lipschitz constant at the horizon
        u: Comparator
        eps: Learner hyperparameter
        forgetting: Product of the discount factors over the stability window
        max_x_recent: Largest prediction inside the stability window
        max_x_old: Largest prediction before the stability window
        G_old: Discounted Lipschitz constant at the start of the stability window

    Returns:
        The bound value

    Raises:
        DomainError: on a negative input or a nonpositive eps
    """
    for name, value in (
        ("V", V), ("G", G), ("u", u), ("forgetting", forgetting),
        ("max_x_recent", max_x_recent), ("max_x_old", max_x_old), ("G_old", G_old),
    ):
        if value < 0:
            raise DomainError(f"{name} must be nonnegative, got {value}")
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    L = _log_term(u, eps)
    S = 8.0 * G * L * L + 2.0 * math.sqrt(V + 16.0 * G * G) * L
    return (
        eps * math.sqrt(V + 2.0 * G * S + 16.0 * G * G)
        + u * (S + G)
        + max_x_recent * G
        + forgetting * max_x_old * G_old
    )


def window_bound_inputs(
    predictions: Sequence[float],
    g_norms: Sequence[float],
    lambdas_prev: Sequence[float],
    tau: int,
) -> Dict[str, float]:
    """
    Collect the run statistics the magnitude bound needs for a stability window.

    Args:
        predictions: Nonnegative predictions x_1..x_T (or their norms)
        g_norms: ||g_t|| for t = 1..T
        lambdas_prev: lambda_{t-1} for t = 1..T
        tau: Stability window length, 1 <= tau

    Returns:
        Keyword arguments V, G, forgetting, max_x_recent, max_x_old, G_old
    """
    T = len(predictions)
    if tau < 1:
        raise DomainError(f"Stability window must be >= 1, got {tau}")
    tau = min(tau, T)
    x = np.asarray(predictions, dtype=float)
    lam = np.asarray(lambdas_prev, dtype=float)
    _, V, G = moments_history(g_norms, lam)
    split = T - tau
    # rounds split+1..T receive lambda_split..lambda_{T-1}
    forgetting = float(np.prod(lam[split:T])) if split > 0 else 0.0
    return {
        "V": float(V[-1]),
        "G": float(G[-1]),
        "forgetting": forgetting,
        "max_x_recent": float(x[split:].max()),
        "max_x_old": float(x[:split].max()) if split > 0 else 0.0,
        "G_old": float(G[split - 1]) if split > 0 else 0.0,
    }


class MagnitudeLearner(OnlineLearner):
    """
    Stateful wrapper over the scalar update.

    Predictions live on [0, inf).
    """

    def __init__(
        self,
        learner_id: str,
        variant: ScalarVariant = ScalarVariant.DISCOUNTED,
        eps: float = DISCOUNTED_OCO_DEFAULT_EPS,
        v_init: float = DISCOUNTED_OCO_MAGDIS_V_INIT,
        forbid_surrogate: bool = False,
    ):
        super().__init__(learner_id, dim=1)
        self.state = ScalarLearnerState.initial(variant, eps=eps, v_init=v_init)
        self.discounted = self.state.variant != ScalarVariant.UNDISCOUNTED
        self.forbid_surrogate = forbid_surrogate
        self._cached: Optional[Tuple[float, float]] = None

    def predict(self) -> float:
        if self._cached is None:
            x, x_tilde, saturated = predict_with_flag(self.state)
            if saturated:
                self.saturated_rounds += 1
                if self.saturated_rounds == 1:
                    logger.warning("%s: prediction saturated the exponent clamp", self)
            self._cached = (x, x_tilde)
        return self._cached[0]

    def update(self, g, lambda_prev: float):
        self.predict()
        self.state, _ = update(
            self.state,
            float(np.asarray(g).reshape(-1)[0]),
            lambda_prev,
            forbid_surrogate=self.forbid_surrogate,
            prediction=self._cached,
        )
        self._cached = None

    def snapshot(self) -> Dict[str, Any]:
        snap = asdict(self.state)
        snap["variant"] = self.state.variant.value
        return snap

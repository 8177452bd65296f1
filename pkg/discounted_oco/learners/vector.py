"""
Discounted adaptivity on R^d by polar decomposition.

The prediction is bias + w * y: a hinted scalar magnitude learner picks y >= 0
and a discounted AdaGrad learner on the unit ball picks the direction w.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

import numpy as np

from ..exceptions import DomainError
from ..settings import DISCOUNTED_OCO_DEFAULT_EPS
from . import scalar
from .base import OnlineLearner
from .scalar import ScalarLearnerState, ScalarVariant

logger = logging.getLogger(__name__)

BALL_DIAMETER = 2.0


def _as_vector(x, dim: int, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.shape[0] != dim:
        raise DomainError(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite components: {arr}")
    return arr


def project_ball(x: np.ndarray, radius: float = 1.0, center: Optional[np.ndarray] = None) -> np.ndarray:
    """Euclidean projection onto a ball by radial scaling"""
    offset = x if center is None else x - center
    norm = float(np.linalg.norm(offset))
    if norm <= radius:
        return x
    scaled = offset * (radius / norm)
    return scaled if center is None else center + scaled


@dataclass(frozen=True)
class BallLearnerState:
    w: np.ndarray
    V: float = 0.0
    D: float = BALL_DIAMETER

    @classmethod
    def initial(cls, dim: int) -> "BallLearnerState":
        return cls(w=np.zeros(dim))


def ball_step(state: BallLearnerState, g, lambda_prev: float) -> BallLearnerState:
    """
    One discounted AdaGrad step on the unit ball.

    V' = lambda^2 V + ||g||^2 and w' = proj(w - D g / sqrt(V')); w is kept when V' = 0.
    """
    g = _as_vector(g, state.w.shape[0], "gradient")
    if not math.isfinite(lambda_prev) or lambda_prev <= 0:
        raise DomainError(f"Discount factor must lie in (0, inf), got {lambda_prev}")
    V = lambda_prev * lambda_prev * state.V + float(g @ g)
    if V == 0.0:
        return BallLearnerState(w=state.w, V=V, D=state.D)
    w = project_ball(state.w - (state.D / math.sqrt(V)) * g)
    return BallLearnerState(w=w, V=V, D=state.D)


@dataclass(frozen=True)
class VectorLearnerState:
    mag: ScalarLearnerState
    ball: BallLearnerState
    h: float = 0.0
    bias: np.ndarray = field(default_factory=lambda: np.zeros(1))

    @property
    def dim(self) -> int:
        return int(self.ball.w.shape[0])

    @classmethod
    def initial(
        cls, dim: int, eps: float = DISCOUNTED_OCO_DEFAULT_EPS, bias: Optional[Sequence[float]] = None
    ) -> "VectorLearnerState":
        if dim < 1:
            raise DomainError(f"Dimension must be positive, got {dim}")
        bias_arr = np.zeros(dim) if bias is None else _as_vector(bias, dim, "bias")
        return cls(
            mag=ScalarLearnerState.initial(ScalarVariant.HINTED, eps=eps),
            ball=BallLearnerState.initial(dim),
            h=0.0,
            bias=bias_arr,
        )


def predict(state: VectorLearnerState) -> np.ndarray:
    """
    Return bias + w * y.

    Raises:
        DomainError: if the bias and direction dimensions disagree
    """
    if state.bias.shape != state.ball.w.shape:
        raise DomainError(f"Bias shape {state.bias.shape} != direction shape {state.ball.w.shape}")
    y, _ = scalar.predict(state.mag)
    return state.bias + state.ball.w * y


def update(state: VectorLearnerState, g, lambda_prev: float) -> VectorLearnerState:
    """
    Advance both sub-learners.

    h' = max(lambda h, ||g||); the clipped gradient g * lambda h / h' drives the
    magnitude learner (through <g_clip, w>, with hint h') and the ball learner.
    """
    g = _as_vector(g, state.dim, "gradient")
    if not math.isfinite(lambda_prev) or lambda_prev <= 0:
        raise DomainError(f"Discount factor must lie in (0, inf), got {lambda_prev}")
    g_norm = float(np.linalg.norm(g))
    bound = lambda_prev * state.h
    h_next = max(bound, g_norm)
    g_clip = g * (bound / h_next) if h_next > 0 else np.zeros_like(g)
    mag, _ = scalar.update(state.mag, float(g_clip @ state.ball.w), lambda_prev, hint_override=h_next)
    ball = ball_step(state.ball, g_clip, lambda_prev)
    return VectorLearnerState(mag=mag, ball=ball, h=h_next, bias=state.bias)


def vector_regret_bound(u_norm: float, V: float, eps: float, **window) -> float:
    """
    Bound for the vector learner against a comparator of norm u_norm.

    The magnitude bound at u_norm plus u_norm * (3/2) * D * sqrt(V) for the
    direction learner with D = 2. ``window`` carries G and the stability-window
    statistics taken over the magnitudes y_t.
    """
    return scalar.magnitude_regret_bound(V=V, u=u_norm, eps=eps, **window) + (
        u_norm * 1.5 * BALL_DIAMETER * math.sqrt(V)
    )


class VectorLearner(OnlineLearner):
    """Stateful wrapper over the polar-decomposition learner"""

    def __init__(
        self,
        learner_id: str,
        dim: int,
        eps: float = DISCOUNTED_OCO_DEFAULT_EPS,
        bias: Optional[Sequence[float]] = None,
    ):
        super().__init__(learner_id, dim=dim)
        self.state = VectorLearnerState.initial(dim, eps=eps, bias=bias)

    @property
    def magnitude(self) -> float:
        return scalar.predict(self.state.mag)[0]

    def predict(self) -> np.ndarray:
        return predict(self.state)

    def update(self, g, lambda_prev: float):
        self.state = update(self.state, g, lambda_prev)

    def snapshot(self) -> Dict[str, Any]:
        return {
            "v": self.state.mag.v,
            "s": self.state.mag.s,
            "h": self.state.h,
            "w": self.state.ball.w.tolist(),
            "V": self.state.ball.V,
            "bias": self.state.bias.tolist(),
        }

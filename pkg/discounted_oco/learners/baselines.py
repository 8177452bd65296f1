"""
Online gradient descent baselines.

Four step-size rules share one projected step x' = proj(x - eta g):

- constant_lr: eta = (D/G) sqrt(1 - lambda^2) for a known constant lambda
- horizon: eta_t = D / (G sqrt(H_t))
- adagrad: eta_t = D / sqrt(V_t)
- simple: adagrad with lambda = 1 and D = eta_scale

Also the L2-regularized OGD step and its discounted linear FTRL twin.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..exceptions import DomainError, UsageError
from ..schedules import DiscountedMoments, update_moments
from .base import OnlineLearner
from .vector import project_ball

logger = logging.getLogger(__name__)

_LAMBDA_ATOL = 1e-12


class DomainKind(str, Enum):
    INTERVAL = "interval"
    BALL = "ball"
    UNCONSTRAINED = "unconstrained"


class OgdRule(str, Enum):
    CONSTANT_LR = "constant_lr"
    HORIZON = "horizon"
    ADAGRAD = "adagrad"
    SIMPLE = "simple"


@dataclass(frozen=True)
class Domain:
    """
    Convex feasible set.

    An interval is a coordinate-wise box [lo, hi] (hi may be inf); a ball is
    centered at ``center`` (the origin when empty) with the given radius.
    """

    kind: DomainKind = DomainKind.UNCONSTRAINED
    lo: float = -math.inf
    hi: float = math.inf
    radius: float = math.inf
    center: Tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", DomainKind(self.kind))
        if self.kind == DomainKind.INTERVAL and not self.lo <= self.hi:
            raise DomainError(f"Empty interval [{self.lo}, {self.hi}]")
        if self.kind == DomainKind.BALL and not self.radius > 0:
            raise DomainError(f"Ball radius must be positive, got {self.radius}")

    @classmethod
    def interval(cls, lo: float, hi: float) -> "Domain":
        return cls(kind=DomainKind.INTERVAL, lo=lo, hi=hi)

    @classmethod
    def nonnegative(cls) -> "Domain":
        return cls(kind=DomainKind.INTERVAL, lo=0.0, hi=math.inf)

    @classmethod
    def ball(cls, radius: float, center: Tuple[float, ...] = ()) -> "Domain":
        return cls(kind=DomainKind.BALL, radius=radius, center=tuple(center))

    def diameter(self, dim: int = 1) -> float:
        if self.kind == DomainKind.INTERVAL:
            return (self.hi - self.lo) * math.sqrt(dim)
        if self.kind == DomainKind.BALL:
            return 2.0 * self.radius
        return math.inf

    def contains(self, x: np.ndarray, atol: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        if self.kind == DomainKind.INTERVAL:
            return bool(np.all(x >= self.lo - atol) and np.all(x <= self.hi + atol))
        if self.kind == DomainKind.BALL:
            c = np.asarray(self.center, dtype=float) if self.center else 0.0
            return float(np.linalg.norm(x - c)) <= self.radius + atol
        return True

    def project(self, x: np.ndarray) -> np.ndarray:
        if self.kind == DomainKind.INTERVAL:
            return np.clip(x, self.lo, self.hi)
        if self.kind == DomainKind.BALL:
            center = np.asarray(self.center, dtype=float) if self.center else None
            return project_ball(x, self.radius, center)
        return x

    def start(self, dim: int) -> np.ndarray:
        """Projection of the origin: the default first iterate"""
        return self.project(np.zeros(dim))


@dataclass(frozen=True)
class OgdState:
    x: np.ndarray
    domain: Domain = field(default_factory=Domain)
    rule: OgdRule = OgdRule.ADAGRAD
    D: float = 1.0
    G: float = 1.0
    lam: Optional[float] = None
    eta_scale: float = 1.0
    moments: DiscountedMoments = field(default_factory=DiscountedMoments)

    def __post_init__(self):
        object.__setattr__(self, "rule", OgdRule(self.rule))
        if self.rule == OgdRule.CONSTANT_LR:
            if self.lam is None or not 0 < self.lam < 1:
                raise DomainError(f"constant_lr needs a constant lambda in (0, 1), got {self.lam}")
            if self.G <= 0 or self.D <= 0:
                raise DomainError(f"constant_lr needs D, G > 0, got D={self.D}, G={self.G}")
        if self.rule == OgdRule.HORIZON and (self.G <= 0 or self.D <= 0):
            raise DomainError(f"horizon rule needs D, G > 0, got D={self.D}, G={self.G}")

    @property
    def H(self) -> float:
        return self.moments.H

    def learning_rate(self) -> float:
        """Step size for the round whose moments are already folded in"""
        if self.rule == OgdRule.CONSTANT_LR:
            return constant_learning_rate(self.D, self.G, self.lam)
        if self.rule == OgdRule.HORIZON:
            return self.D / (self.G * math.sqrt(self.moments.H))
        scale = self.eta_scale if self.rule == OgdRule.SIMPLE else self.D
        if self.moments.V == 0.0:
            return 0.0
        return scale / math.sqrt(self.moments.V)


def constant_learning_rate(D: float, G: float, lam: float) -> float:
    """eta = (D/G) sqrt(1 - lambda^2)"""
    return D / G * math.sqrt(1.0 - lam * lam)


def ogd_step(state: OgdState, g, lambda_prev: float) -> OgdState:
    """
    One projected gradient step.

    Raises:
        DomainError: on non-finite gradients
        UsageError: if constant_lr sees a lambda other than its own
    """
    g = np.asarray(g, dtype=float).reshape(state.x.shape)
    if not np.all(np.isfinite(g)):
        raise DomainError(f"Gradient must be finite, got {g}")
    if state.rule == OgdRule.CONSTANT_LR and abs(lambda_prev - state.lam) > _LAMBDA_ATOL:
        raise UsageError(
            f"constant_lr was tuned for lambda={state.lam} but received {lambda_prev}"
        )
    lam = 1.0 if state.rule == OgdRule.SIMPLE else lambda_prev
    moments = update_moments(state.moments, float(np.linalg.norm(g)), lam)
    stepped = replace(state, moments=moments)
    eta = stepped.learning_rate()
    if eta == 0.0:
        return stepped
    return replace(stepped, x=state.domain.project(state.x - eta * g))


def l2_regularized_ogd_step(x, g, eta: float, gamma: float) -> np.ndarray:
    """Gradient step on <g, x> + (gamma/2)||x||^2: returns (1 - eta gamma) x - eta g"""
    return (1.0 - eta * gamma) * np.asarray(x, dtype=float) - eta * np.asarray(g, dtype=float)


def linear_ftrl_step(history, g, lam: float, c: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Discounted FTRL with a linear prediction function.

    Returns:
        (sum', prediction) where sum' = lam * sum + g and prediction = -c * sum'
    """
    total = lam * np.asarray(history, dtype=float) + np.asarray(g, dtype=float)
    return total, -c * total


# Regret bounds


def constant_lr_bound(D: float, G: float, lam: float) -> float:
    """(3/2) D G / sqrt(1 - lambda^2), valid for T >= (1/2)(1 - lambda)^-1"""
    return 1.5 * D * G / math.sqrt(1.0 - lam * lam)


def constant_lr_horizon_bound(D: float, G: float, H: float) -> float:
    """Same guarantee in terms of the effective horizon: 3/(2 sqrt(1 - 1/e)) D G sqrt(H)"""
    return 1.5 / math.sqrt(1.0 - math.exp(-1.0)) * D * G * math.sqrt(H)


def constant_lr_valid(T: int, lam: float) -> bool:
    return T >= 0.5 / (1.0 - lam)


def horizon_bound(D: float, G: float, H: float) -> float:
    """(3/2) D G sqrt(H_T)"""
    return 1.5 * D * G * math.sqrt(H)


def adagrad_bound(D: float, V: float) -> float:
    """(3/2) D sqrt(V_T)"""
    return 1.5 * D * math.sqrt(V)


class OgdLearner(OnlineLearner):
    """Stateful wrapper over ogd_step"""

    def __init__(
        self,
        learner_id: str,
        dim: int,
        rule: OgdRule,
        domain: Domain,
        D: float = 1.0,
        G: float = 1.0,
        lam: Optional[float] = None,
        eta_scale: float = 1.0,
        discounted: bool = True,
    ):
        super().__init__(learner_id, dim=dim)
        self.discounted = discounted and OgdRule(rule) != OgdRule.SIMPLE
        self.state = OgdState(
            x=domain.start(dim), domain=domain, rule=rule, D=D, G=G, lam=lam, eta_scale=eta_scale
        )

    def predict(self) -> np.ndarray:
        return self.state.x

    def update(self, g, lambda_prev: float):
        self.state = ogd_step(self.state, g, self.effective_lambda(lambda_prev))

    def snapshot(self) -> Dict[str, Any]:
        return {
            "x": self.state.x.tolist(),
            "H": self.state.moments.H,
            "V": self.state.moments.V,
            "G": self.state.moments.G,
        }


class LinearFtrlLearner(OnlineLearner):
    """Discounted linear FTRL on R^d; requires a constant schedule"""

    def __init__(self, learner_id: str, dim: int, c: float, lam: float):
        super().__init__(learner_id, dim=dim)
        self.c = c
        self.lam = lam
        self.total = np.zeros(dim)
        self.x = np.zeros(dim)

    def predict(self) -> np.ndarray:
        return self.x

    def update(self, g, lambda_prev: float):
        if abs(lambda_prev - self.lam) > _LAMBDA_ATOL:
            raise UsageError(f"linear FTRL needs constant lambda={self.lam}, got {lambda_prev}")
        self.total, self.x = linear_ftrl_step(self.total, g, self.lam, self.c)

    def snapshot(self) -> Dict[str, Any]:
        return {"sum": self.total.tolist(), "x": self.x.tolist()}


class L2OgdLearner(OnlineLearner):
    """Unconstrained OGD on L2-regularized linear surrogates"""

    def __init__(self, learner_id: str, dim: int, eta: float, gamma: float):
        super().__init__(learner_id, dim=dim)
        self.eta = eta
        self.gamma = gamma
        self.x = np.zeros(dim)

    def predict(self) -> np.ndarray:
        return self.x

    def update(self, g, lambda_prev: float):
        self.x = l2_regularized_ogd_step(self.x, g, self.eta, self.gamma)

    def snapshot(self) -> Dict[str, Any]:
        return {"x": self.x.tolist()}

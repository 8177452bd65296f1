"""
Learner factory.
"""
import logging
import math
from typing import Optional

from ..conformal import AcpLearner
from ..exceptions import ConfigError
from ..schedules import DiscountSchedule
from ..utils.validation import LearnerSpec
from .base import UNDISCOUNTED_KINDS, LearnerKind, OnlineLearner
from .baselines import Domain, L2OgdLearner, LinearFtrlLearner, OgdLearner, OgdRule
from .scalar import MagnitudeLearner, ScalarVariant
from .vector import VectorLearner

logger = logging.getLogger(__name__)

_OGD_RULES = {
    LearnerKind.OGD_CONSTANT: OgdRule.CONSTANT_LR,
    LearnerKind.OGD_HORIZON: OgdRule.HORIZON,
    LearnerKind.ADAGRAD: OgdRule.ADAGRAD,
    LearnerKind.SIMPLE_OGD: OgdRule.SIMPLE,
    LearnerKind.SF_OGD: OgdRule.ADAGRAD,
}

_SCALAR_ONLY = frozenset({LearnerKind.MAGL_D, LearnerKind.MAGL, LearnerKind.MAGDIS})


def build_domain(spec: LearnerSpec, protocol: str) -> Domain:
    """Feasible set of an OGD learner; radius learners always live on [0, inf)"""
    if protocol == "ocp" or spec.domain == "nonnegative":
        return Domain.nonnegative()
    if spec.domain == "interval":
        return Domain.interval(spec.lo, spec.hi)
    if spec.domain == "ball":
        return Domain.ball(spec.radius)
    return Domain()


def _constant_lambda(spec: LearnerSpec, schedule: DiscountSchedule) -> float:
    if not schedule.is_constant:
        raise ConfigError(f"{spec.kind.value} learner {spec.id!r} needs a constant schedule")
    return schedule.lam


def get_learner(
    spec: LearnerSpec,
    dim: int,
    protocol: str = "oco",
    schedule: Optional[DiscountSchedule] = None,
) -> OnlineLearner:
    """
    Factory function to build a learner from its config entry.

    Args:
        spec: Learner entry of the experiment config
        dim: Dimension of the stream's decision variable
        protocol: "oco" for loss streams or "ocp" for radius streams
        schedule: Experiment schedule, needed by learners tuned for a constant lambda

    Returns:
        A fresh OnlineLearner

    Raises:
        ConfigError: if the learner cannot run on this stream
    """
    kind = LearnerKind(spec.kind)
    schedule = schedule or DiscountSchedule.unit()
    if protocol == "ocp" and kind == LearnerKind.VECTOR:
        raise ConfigError(f"Vector learner {spec.id!r} cannot run on a radius stream")
    if protocol == "ocp" and kind in (LearnerKind.LINEAR_FTRL, LearnerKind.L2_OGD):
        raise ConfigError(f"{kind.value} learner {spec.id!r} is unconstrained; radius streams need [0, inf)")
    if kind in _SCALAR_ONLY and dim != 1:
        raise ConfigError(f"{kind.value} learner {spec.id!r} is one-dimensional, stream has dim {dim}")

    if kind in (LearnerKind.MAGL_D, LearnerKind.MAGL):
        discounted = kind == LearnerKind.MAGL_D
        if protocol == "ocp":
            return AcpLearner(spec.id, eps=spec.eps, discounted=discounted)
        variant = ScalarVariant.DISCOUNTED if discounted else ScalarVariant.UNDISCOUNTED
        return MagnitudeLearner(spec.id, variant=variant, eps=spec.eps)
    if kind == LearnerKind.MAGDIS:
        return MagnitudeLearner(spec.id, variant=ScalarVariant.MAGDIS, eps=spec.eps, v_init=spec.v_init)
    if kind == LearnerKind.VECTOR:
        return VectorLearner(spec.id, dim=dim, eps=spec.eps, bias=spec.bias)
    if kind in _OGD_RULES:
        domain = build_domain(spec, protocol)
        rule = _OGD_RULES[kind]
        D = spec.D if spec.D is not None else domain.diameter(dim)
        if kind == LearnerKind.SF_OGD:
            if spec.d_est is None:
                raise ConfigError(f"sf_ogd learner {spec.id!r} needs d_est")
            D = spec.d_est
        if rule in (OgdRule.HORIZON, OgdRule.CONSTANT_LR) and not math.isfinite(D):
            raise ConfigError(f"{kind.value} learner {spec.id!r} needs a finite D")
        if rule == OgdRule.ADAGRAD and not math.isfinite(D):
            raise ConfigError(f"{kind.value} learner {spec.id!r} needs D on an unbounded domain")
        lam = _constant_lambda(spec, schedule) if rule == OgdRule.CONSTANT_LR else None
        eta_scale = spec.D if (kind == LearnerKind.SIMPLE_OGD and spec.D is not None) else 1.0
        return OgdLearner(
            spec.id,
            dim=dim,
            rule=rule,
            domain=domain,
            D=D,
            G=spec.G,
            lam=lam,
            eta_scale=eta_scale,
            discounted=kind not in UNDISCOUNTED_KINDS,
        )
    if kind == LearnerKind.LINEAR_FTRL:
        return LinearFtrlLearner(spec.id, dim=dim, c=spec.eta, lam=_constant_lambda(spec, schedule))
    if kind == LearnerKind.L2_OGD:
        lam = _constant_lambda(spec, schedule)
        gamma = spec.gamma if spec.gamma is not None else (1.0 - lam) / spec.eta
        return L2OgdLearner(spec.id, dim=dim, eta=spec.eta, gamma=gamma)
    raise ConfigError(f"Unsupported learner kind: {kind}")

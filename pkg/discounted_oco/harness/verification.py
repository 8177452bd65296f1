"""
Bound checks on recorded runs.

Each check compares a measured quantity from a ledger with the guarantee of
the learner that produced it; one VerdictRow per (check, comparator, window).
"""
import logging
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence, Union

import numpy as np

from ..conformal import coverage_bound, coverage_bound_from_radius
from ..environments import comparator_vector
from ..ledger import RunLedger
from ..learners import baselines
from ..learners.base import LearnerKind
from ..learners.baselines import OgdLearner, OgdRule
from ..learners.registry import get_learner
from ..learners.scalar import magnitude_regret_bound, window_bound_inputs
from ..learners.vector import vector_regret_bound
from ..metrics import RegretMode, conformal_statistics, discounted_regret, ledger_moments
from ..schedules import DiscountSchedule
from ..utils.validation import LearnerSpec

logger = logging.getLogger(__name__)

_RTOL = 1e-9


@dataclass
class VerdictRow:
    learner_id: str
    trial: int
    check: str
    u: str
    tau: Optional[int]
    measured: float
    bound: float
    passed: bool

    def as_dict(self):
        return asdict(self)


def _row(ledger: RunLedger, check: str, u, tau, measured: float, bound: float) -> VerdictRow:
    passed = measured <= bound + _RTOL * max(1.0, abs(bound))
    return VerdictRow(
        learner_id=ledger.meta.learner_id,
        trial=ledger.meta.trial,
        check=check,
        u=_format_u(u),
        tau=tau,
        measured=float(measured),
        bound=float(bound),
        passed=bool(passed),
    )


def _format_u(u) -> str:
    if u is None:
        return ""
    arr = np.atleast_1d(np.asarray(u, dtype=float))
    return " ".join(repr(float(c)) for c in arr)


def _measured_regret(ledger: RunLedger, u) -> float:
    mode = RegretMode.EXACT_LOSS if all(r.loss is not None for r in ledger.rounds) else RegretMode.LINEARIZED
    return discounted_regret(ledger, u, mode)


def _magnitude_rows(ledger, spec, grid, taus) -> List[VerdictRow]:
    rows = []
    x = ledger.predictions()[:, 0]
    g_norms = np.linalg.norm(ledger.gradients(), axis=1)
    lam = ledger.lambdas()
    for u in grid:
        u_arr = np.atleast_1d(np.asarray(u, dtype=float))
        if u_arr.shape[0] != 1 or u_arr[0] < 0:
            logger.debug("Skipping comparator %s outside [0, inf)", u)
            continue
        measured = _measured_regret(ledger, u_arr)
        for tau in taus:
            stats = window_bound_inputs(x, g_norms, lam, tau)
            bound = magnitude_regret_bound(u=float(u_arr[0]), eps=spec.eps, **stats)
            rows.append(_row(ledger, "magnitude_ftrl", u_arr, tau, measured, bound))
    return rows


def _vector_rows(ledger, spec, grid, taus) -> List[VerdictRow]:
    rows = []
    dim = ledger.meta.dim
    bias = np.zeros(dim) if spec.bias is None else np.asarray(spec.bias, dtype=float)
    y = np.array([r.magnitude for r in ledger.rounds], dtype=float)
    g_norms = np.linalg.norm(ledger.gradients(), axis=1)
    lam = ledger.lambdas()
    for u in grid:
        u_vec = comparator_vector(u, dim)
        measured = _measured_regret(ledger, u_vec)
        u_norm = float(np.linalg.norm(u_vec - bias))
        for tau in taus:
            stats = window_bound_inputs(y, g_norms, lam, tau)
            V = stats.pop("V")
            bound = vector_regret_bound(u_norm, V=V, eps=spec.eps, **stats)
            rows.append(_row(ledger, "vector_polar", u_vec, tau, measured, bound))
    return rows


def _ogd_rows(ledger, learner: OgdLearner, grid) -> List[VerdictRow]:
    rows = []
    state = learner.state
    domain = state.domain
    dim = ledger.meta.dim
    diameter = domain.diameter(dim)
    H, V, _ = ledger_moments(ledger)
    T = ledger.horizon
    g_max = float(np.linalg.norm(ledger.gradients(), axis=1).max()) if T else 0.0
    for u in grid:
        u_vec = comparator_vector(u, dim)
        if not domain.contains(u_vec):
            logger.debug("Skipping comparator %s outside the domain", u)
            continue
        measured = _measured_regret(ledger, u_vec)
        if state.rule == OgdRule.HORIZON:
            if g_max <= state.G * (1 + _RTOL) and diameter <= state.D * (1 + _RTOL):
                rows.append(_row(ledger, "horizon_ogd", u_vec, None, measured,
                                 baselines.horizon_bound(state.D, state.G, H[-1])))
        elif state.rule == OgdRule.CONSTANT_LR:
            if g_max <= state.G * (1 + _RTOL) and baselines.constant_lr_valid(T, state.lam):
                rows.append(_row(ledger, "constant_lr_ogd", u_vec, None, measured,
                                 baselines.constant_lr_bound(state.D, state.G, state.lam)))
                rows.append(_row(ledger, "constant_lr_ogd_horizon", u_vec, None, measured,
                                 baselines.constant_lr_horizon_bound(state.D, state.G, H[-1])))
        else:
            D = state.eta_scale if state.rule == OgdRule.SIMPLE else state.D
            if diameter <= D * (1 + _RTOL):
                rows.append(_row(ledger, "adagrad", u_vec, None, measured, baselines.adagrad_bound(D, V[-1])))
            else:
                logger.debug("%s: D=%s below domain diameter %s, no guarantee", ledger.meta.learner_id, D, diameter)
    return rows


def _coverage_rows(ledger: RunLedger, spec: LearnerSpec) -> List[VerdictRow]:
    stats = conformal_statistics(ledger)
    rows = []
    D = ledger.meta.hidden_ceiling
    if D is not None:
        rows.append(_row(ledger, "coverage", None, None, abs(stats.s_star[-1]),
                         coverage_bound(stats.v_clip[-1], stats.g_max[-1], D, spec.eps)))
    r = ledger.predictions()[:, 0]
    if ledger.horizon > 1:
        for check, sums, clipped in (
            ("coverage_radius", stats.s_star, False),
            ("coverage_radius_clip", stats.s_clip, True),
        ):
            bounds = np.array([
                coverage_bound_from_radius(
                    stats.v_clip[t], stats.g_max[t], r[t + 1], spec.eps, clipped=clipped
                )
                for t in range(ledger.horizon - 1)
            ])
            margins = bounds - np.abs(sums[:-1])
            worst = int(np.argmin(margins))
            rows.append(_row(ledger, check, None, None, abs(sums[worst]), bounds[worst]))
    return rows


def verify_bounds(
    ledger: RunLedger,
    spec: LearnerSpec,
    comparator_grid: Sequence[Union[float, Sequence[float]]],
    taus: Sequence[int] = (1,),
    schedule: Optional[DiscountSchedule] = None,
) -> List[VerdictRow]:
    """
    Check the learner's guarantees on a recorded run.

    Args:
        ledger: Complete run ledger
        spec: Config entry of the learner that produced it
        comparator_grid: Comparators for regret checks
        taus: Stability windows for the magnitude bounds
        schedule: Experiment schedule (learners tuned to a constant lambda need it)

    Returns:
        One VerdictRow per check; empty when the learner carries no guarantee
    """
    kind = LearnerKind(spec.kind)
    protocol = ledger.meta.protocol
    if protocol == "ocp":
        if kind in (LearnerKind.MAGL_D, LearnerKind.MAGL):
            return _coverage_rows(ledger, spec)
        return []
    if kind in (LearnerKind.MAGL_D, LearnerKind.MAGL):
        return _magnitude_rows(ledger, spec, comparator_grid, taus)
    if kind == LearnerKind.VECTOR:
        return _vector_rows(ledger, spec, comparator_grid, taus)
    learner = get_learner(spec, ledger.meta.dim, protocol, schedule)
    if isinstance(learner, OgdLearner):
        return _ogd_rows(ledger, learner, comparator_grid)
    return []

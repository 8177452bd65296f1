"""
Experiment orchestration: drives every (learner, trial) pair through the
online protocol and collects ledgers.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..environments import Stream, build_stream, loss_to_dict, radius_loss_for
from ..ledger import LedgerMeta, RoundRecord, RunLedger, config_hash
from ..learners.base import LearnerKind, OnlineLearner
from ..learners.registry import get_learner
from ..learners.vector import VectorLearner
from ..settings import get_worker_count
from ..utils.validation import ExperimentConfig, LearnerSpec
from .reports import write_reports
from .verification import VerdictRow, verify_bounds

logger = logging.getLogger(__name__)


@dataclass
class TrialResult:
    ledger: RunLedger
    step_time: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    ledgers: Dict[Tuple[str, int], RunLedger] = field(default_factory=dict)
    step_times: Dict[str, List[float]] = field(default_factory=dict)
    verdicts: List[VerdictRow] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def ledgers_for(self, learner_id: str) -> List[RunLedger]:
        return [ledger for (lid, _), ledger in self.ledgers.items() if lid == learner_id]


class ExperimentRunner:
    """
    Runs an experiment config.

    Streams are built once per trial and shared by every learner; trials fan
    out over a thread pool and merge back in (learner, trial) order.
    """

    def __init__(self, config: ExperimentConfig, workers: Optional[int] = None):
        self.config = config
        self.schedule = config.schedule.to_schedule()
        self.protocol = config.protocol
        self.spec_hash = config_hash(config.snapshot())
        self.workers = workers or get_worker_count()
        self._streams: Dict[int, Stream] = {}
        self._lambdas = self.schedule.lambdas(config.environment.horizon)

    def run(self, verify: bool = True) -> ExperimentResult:
        """
        Execute every (learner, trial) pair.

        Args:
            verify: Evaluate bound verdicts on every ledger

        Returns:
            ExperimentResult with ledgers in (learner, trial) order
        """
        self._check_learners()
        for trial in range(self.config.trials):
            self._streams[trial] = build_stream(self.config.environment, self.schedule, trial)

        jobs = [(spec, trial) for spec in self.config.learners for trial in range(self.config.trials)]
        logger.info(
            "Running %d learners x %d trials (%s, T=%d, schedule %s) on %d workers",
            len(self.config.learners), self.config.trials, self.protocol,
            self.config.environment.horizon, self.schedule.describe(), self.workers,
        )
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            futures = [pool.submit(self._run_trial, spec, trial) for spec, trial in jobs]
            outcomes = [f.result() for f in futures]

        result = ExperimentResult(config=self.config)
        for (spec, trial), outcome in zip(jobs, outcomes):
            result.ledgers[(spec.id, trial)] = outcome.ledger
            result.step_times.setdefault(spec.id, []).append(outcome.step_time)
            if outcome.ledger.meta.saturated_rounds:
                logger.warning(
                    "%s trial %d: %d saturated rounds",
                    spec.id, trial, outcome.ledger.meta.saturated_rounds,
                )
            if verify:
                result.verdicts.extend(
                    verify_bounds(
                        outcome.ledger, spec, self.config.comparator_grid,
                        taus=self.config.taus, schedule=self.schedule,
                    )
                )
        failed = [v for v in result.verdicts if not v.passed]
        if failed:
            logger.warning("%d of %d bound checks failed", len(failed), len(result.verdicts))
        return result

    def _check_learners(self):
        dim = self.config.environment.dim
        for spec in self.config.learners:
            get_learner(spec, dim, self.protocol, self.schedule)

    def _run_trial(self, spec: LearnerSpec, trial: int) -> TrialResult:
        learner = get_learner(spec, self.config.environment.dim, self.protocol, self.schedule)
        stream = self._streams[trial]
        if self.protocol == "ocp":
            rounds, elapsed = self._ocp_loop(learner, stream)
        else:
            rounds, elapsed = self._oco_loop(learner, stream)
        meta = LedgerMeta(
            learner_id=spec.id,
            learner_kind=LearnerKind(spec.kind).value,
            protocol=self.protocol,
            spec_hash=self.spec_hash,
            seed=self.config.environment.seed,
            trial=trial,
            dim=learner.dim,
            alpha=self.config.alpha if self.protocol == "ocp" else None,
            hidden_ceiling=stream.hidden_ceiling,
            saturated_rounds=learner.saturated_rounds,
        )
        return TrialResult(ledger=RunLedger(meta=meta, rounds=rounds), step_time=elapsed / stream.horizon)

    def _oco_loop(self, learner: OnlineLearner, stream: Stream) -> Tuple[List[RoundRecord], float]:
        rounds: List[RoundRecord] = []
        elapsed = 0.0
        for t, loss in enumerate(stream.losses, start=1):
            start = time.perf_counter()
            x = np.atleast_1d(np.asarray(learner.predict(), dtype=float))
            g = loss.gradient(x)
            lam = learner.effective_lambda(self._lambdas[t - 1])
            magnitude = learner.magnitude if isinstance(learner, VectorLearner) else None
            learner.update(g, lam)
            elapsed += time.perf_counter() - start
            rounds.append(
                RoundRecord(
                    t=t,
                    prediction=x.tolist(),
                    gradient=np.asarray(g, dtype=float).tolist(),
                    lambda_prev=lam,
                    loss=loss_to_dict(loss),
                    loss_value=loss.value(x),
                    magnitude=magnitude,
                )
            )
        return rounds, elapsed

    def _ocp_loop(self, learner: OnlineLearner, stream: Stream) -> Tuple[List[RoundRecord], float]:
        rounds: List[RoundRecord] = []
        elapsed = 0.0
        alpha = self.config.alpha
        for t, r_star in enumerate(stream.r_star.tolist(), start=1):
            start = time.perf_counter()
            r = float(np.asarray(learner.predict(), dtype=float).reshape(-1)[0])
            loss = radius_loss_for(self.config.loss, r_star, alpha)
            g = loss.gradient(r)
            lam = learner.effective_lambda(self._lambdas[t - 1])
            learner.update(g, lam)
            elapsed += time.perf_counter() - start
            rounds.append(
                RoundRecord(
                    t=t,
                    prediction=[r],
                    gradient=g.tolist(),
                    lambda_prev=lam,
                    loss=loss_to_dict(loss),
                    loss_value=loss.value(r),
                    r_star=r_star,
                    err=int(r <= r_star),
                )
            )
        return rounds, elapsed


def run_experiment(
    config: ExperimentConfig,
    workers: Optional[int] = None,
    verify: bool = True,
    out_dir: Optional[str] = None,
) -> ExperimentResult:
    """
    Run an experiment and return its ledgers and verdicts.

    Args:
        config: Validated experiment config
        workers: Thread cap; defaults to DISCOUNTED_OCO_THREADS
        verify: Evaluate bound verdicts
        out_dir: When given, write reports there

    Returns:
        ExperimentResult
    """
    result = ExperimentRunner(config, workers=workers).run(verify=verify)
    if out_dir is not None:
        write_reports(result, out_dir)
    return result

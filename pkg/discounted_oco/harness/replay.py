"""
Re-derive predictions from a ledger's gradients and discounts.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..ledger import RunLedger
from ..learners.registry import get_learner
from ..schedules import DiscountSchedule
from ..utils.validation import LearnerSpec

logger = logging.getLogger(__name__)


@dataclass
class ReplayResult:
    learner_id: str
    trial: int
    rounds: int
    first_mismatch: Optional[int] = None

    @property
    def matches(self) -> bool:
        return self.first_mismatch is None


def replay_ledger(
    ledger: RunLedger, spec: LearnerSpec, schedule: Optional[DiscountSchedule] = None
) -> ReplayResult:
    """
    Feed a fresh learner the recorded gradients and discounts.

    Returns:
        ReplayResult naming the first round whose prediction differs, if any
    """
    learner = get_learner(spec, ledger.meta.dim, ledger.meta.protocol, schedule)
    result = ReplayResult(learner_id=ledger.meta.learner_id, trial=ledger.meta.trial, rounds=ledger.horizon)
    for record in ledger.rounds:
        x = np.atleast_1d(np.asarray(learner.predict(), dtype=float))
        if x.tolist() != record.prediction:
            result.first_mismatch = record.t
            logger.warning(
                "%s trial %d diverges at round %d: %s != %s",
                result.learner_id, result.trial, record.t, x.tolist(), record.prediction,
            )
            return result
        learner.update(np.asarray(record.gradient, dtype=float), record.lambda_prev)
    return result

"""
Common interface for online learners.
"""
from enum import Enum
from typing import Any, Dict, Union

import numpy as np

Prediction = Union[float, np.ndarray]


class LearnerKind(str, Enum):
    """Learners the harness can instantiate"""
    MAGL_D = "magl_d"
    MAGL = "magl"
    MAGDIS = "magdis"
    VECTOR = "vector"
    OGD_CONSTANT = "ogd_constant"
    OGD_HORIZON = "ogd_horizon"
    ADAGRAD = "adagrad"
    SIMPLE_OGD = "simple_ogd"
    SF_OGD = "sf_ogd"
    LINEAR_FTRL = "linear_ftrl"
    L2_OGD = "l2_ogd"


# Kinds that ignore the schedule and always run with lambda = 1
UNDISCOUNTED_KINDS = frozenset({LearnerKind.MAGL, LearnerKind.SIMPLE_OGD, LearnerKind.SF_OGD})


class OnlineLearner:
    """
    Abstract base class for online learners.

    A learner alternates predict() and update(g, lambda_prev), where g is the
    gradient of the round's loss at the last prediction and lambda_prev is the
    discount factor revealed for that round.
    """

    discounted: bool = True

    def __init__(self, learner_id: str, dim: int = 1):
        self.learner_id = learner_id
        self.dim = dim
        self.saturated_rounds = 0

    def predict(self) -> Prediction:
        """Return the current prediction"""
        raise NotImplementedError

    def update(self, g: Prediction, lambda_prev: float):
        """Consume the round's gradient and discount factor"""
        raise NotImplementedError

    def snapshot(self) -> Dict[str, Any]:
        """JSON-serializable view of the learner state"""
        raise NotImplementedError

    def effective_lambda(self, lambda_prev: float) -> float:
        return float(lambda_prev) if self.discounted else 1.0

    def __repr__(self) -> str:
        return f"{type(self).__name__}(id={self.learner_id!r}, dim={self.dim})"

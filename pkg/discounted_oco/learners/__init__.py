"""
Online learners: scalar magnitude learners, the polar-decomposition vector
learner and the OGD baselines. ``registry.get_learner`` builds them from config.
"""
from .base import LearnerKind, OnlineLearner
from .baselines import Domain, OgdLearner, OgdRule
from .scalar import MagnitudeLearner, ScalarVariant
from .vector import VectorLearner

__all__ = [
    "Domain",
    "LearnerKind",
    "MagnitudeLearner",
    "OgdLearner",
    "OgdRule",
    "OnlineLearner",
    "ScalarVariant",
    "VectorLearner",
]

"""
Shared fixtures for the discounted-oco test suite.
"""
from typing import Callable, List, Optional, Sequence

import numpy as np
import pytest

from discounted_oco.environments import LinearLoss, loss_to_dict
from discounted_oco.learners import scalar
from discounted_oco.learners.scalar import ScalarLearnerState, ScalarVariant
from discounted_oco.ledger import LedgerMeta, RoundRecord, RunLedger


@pytest.fixture
def rng() -> np.random.Generator:
    """Fixed-seed generator for test data."""
    return np.random.default_rng(20240501)


def run_scalar(
    gradients: Sequence[float],
    lambdas: Sequence[float],
    variant: ScalarVariant = ScalarVariant.DISCOUNTED,
    eps: float = 1.0,
    check: Optional[Callable[[ScalarLearnerState], None]] = None,
) -> np.ndarray:
    """Drive the pure scalar update over a gradient sequence; return the predictions."""
    state = ScalarLearnerState.initial(variant, eps=eps)
    xs = np.empty(len(gradients))
    for t, (g, lam) in enumerate(zip(gradients, lambdas)):
        pred = scalar.predict(state)
        xs[t] = pred[0]
        state, _ = scalar.update(state, g, lam, prediction=pred)
        if check is not None:
            check(state)
    return xs


@pytest.fixture
def scalar_runner() -> Callable[..., np.ndarray]:
    return run_scalar


def make_ledger(
    predictions: Sequence,
    gradients: Optional[Sequence] = None,
    lambdas: Optional[Sequence[float]] = None,
    losses: Optional[List] = None,
    r_stars: Optional[Sequence[float]] = None,
    alpha: Optional[float] = None,
    learner_kind: str = "magl_d",
) -> RunLedger:
    """Build a ledger by hand; linear losses are derived from the gradients when absent."""
    preds = [np.atleast_1d(np.asarray(p, dtype=float)) for p in predictions]
    T = len(preds)
    if gradients is None:
        gradients = [loss.gradient(p) for loss, p in zip(losses, preds)]
    grads = [np.atleast_1d(np.asarray(g, dtype=float)) for g in gradients]
    if losses is None and r_stars is None:
        losses = [LinearLoss(g=tuple(g.tolist())) for g in grads]
    lambdas = [1.0] * T if lambdas is None else list(lambdas)
    rounds = []
    for t in range(T):
        record = {
            "t": t + 1,
            "prediction": preds[t].tolist(),
            "gradient": grads[t].tolist(),
            "lambda_prev": float(lambdas[t]),
        }
        if losses is not None:
            record["loss"] = loss_to_dict(losses[t])
        if r_stars is not None:
            record["r_star"] = float(r_stars[t])
            record["err"] = int(preds[t][0] <= r_stars[t])
        rounds.append(RoundRecord(**record))
    meta = LedgerMeta(
        learner_id="hand",
        learner_kind=learner_kind,
        protocol="ocp" if r_stars is not None else "oco",
        spec_hash="0" * 16,
        seed=0,
        trial=0,
        dim=preds[0].shape[0],
        alpha=alpha,
    )
    return RunLedger(meta=meta, rounds=rounds)


@pytest.fixture
def ledger_factory() -> Callable[..., RunLedger]:
    return make_ledger

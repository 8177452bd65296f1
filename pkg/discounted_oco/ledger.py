"""
Per-round run ledgers and their JSON-lines form.

A ledger file holds one LedgerMeta line followed by one RoundRecord line per
round, fields in declared order.
"""
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .exceptions import UsageError
from .settings import DISCOUNTED_OCO_FORMAT_VERSION, DISCOUNTED_OCO_PRNG

logger = logging.getLogger(__name__)


class LedgerMeta(BaseModel):
    """Header line of a ledger"""
    format_version: int = Field(DISCOUNTED_OCO_FORMAT_VERSION, description="Ledger format version")
    learner_id: str = Field(..., description="Learner id from the config")
    learner_kind: str = Field(..., description="Algorithm")
    protocol: str = Field(..., description="oco or ocp")
    spec_hash: str = Field(..., description="Hash of the config snapshot")
    seed: int = Field(..., description="Stream seed")
    trial: int = Field(..., description="Trial index")
    prng: str = Field(DISCOUNTED_OCO_PRNG, description="Stream generator")
    dim: int = Field(1, description="Prediction dimension")
    alpha: Optional[float] = Field(None, description="Target miscoverage for ocp runs")
    hidden_ceiling: Optional[float] = Field(None, description="Max optimal radius, never shown to learners")
    saturated_rounds: int = Field(0, description="Rounds whose prediction hit the exponent clamp")

    model_config = ConfigDict(extra="forbid")


class RoundRecord(BaseModel):
    """One round of the interaction"""
    t: int = Field(..., ge=1, description="1-based round index")
    prediction: List[float] = Field(..., description="x_t, or [r_t] for ocp runs")
    gradient: List[float] = Field(..., description="g_t at the prediction")
    lambda_prev: float = Field(..., gt=0.0, description="Discount factor lambda_{t-1}")
    loss: Optional[Dict[str, Any]] = Field(None, description="Serialized loss descriptor")
    loss_value: Optional[float] = Field(None, description="l_t(x_t)")
    r_star: Optional[float] = Field(None, description="Optimal radius for ocp runs")
    err: Optional[int] = Field(None, ge=0, le=1, description="1[r_t <= r*_t]")
    magnitude: Optional[float] = Field(None, description="Magnitude y_t of the vector learner")

    model_config = ConfigDict(extra="forbid")


class RunLedger(BaseModel):
    """A complete run: header plus rounds"""
    meta: LedgerMeta
    rounds: List[RoundRecord] = Field(default_factory=list)

    model_config = ConfigDict(extra="forbid")

    def __len__(self) -> int:
        return len(self.rounds)

    @property
    def horizon(self) -> int:
        return len(self.rounds)

    @property
    def is_conformal(self) -> bool:
        return bool(self.rounds) and self.rounds[0].r_star is not None

    def predictions(self) -> np.ndarray:
        return np.array([r.prediction for r in self.rounds], dtype=float)

    def gradients(self) -> np.ndarray:
        return np.array([r.gradient for r in self.rounds], dtype=float)

    def lambdas(self) -> np.ndarray:
        return np.array([r.lambda_prev for r in self.rounds], dtype=float)

    def r_stars(self) -> np.ndarray:
        self._require_conformal()
        return np.array([r.r_star for r in self.rounds], dtype=float)

    def errs(self) -> np.ndarray:
        self._require_conformal()
        return np.array([r.err for r in self.rounds], dtype=float)

    def _require_conformal(self):
        if not self.is_conformal:
            raise UsageError(f"Ledger {self.meta.learner_id} has no conformal fields")


def config_hash(snapshot: Dict[str, Any]) -> str:
    """Stable short hash of a config snapshot"""
    payload = json.dumps(snapshot, sort_keys=True).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:16]


def write_ledger(ledger: RunLedger, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(ledger.meta.model_dump_json() + "\n")
        for record in ledger.rounds:
            fh.write(record.model_dump_json() + "\n")
    return path


def read_ledger(path: Union[str, Path]) -> RunLedger:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = [line for line in fh if line.strip()]
    if not lines:
        raise UsageError(f"Empty ledger file: {path}")
    meta = LedgerMeta.model_validate_json(lines[0])
    rounds = [RoundRecord.model_validate_json(line) for line in lines[1:]]
    return RunLedger(meta=meta, rounds=rounds)


def ledger_filename(learner_id: str, trial: int) -> str:
    return f"{learner_id}__trial{trial}.jsonl"

"""
Pydantic schemas for experiment configs.
"""
from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..learners.base import LearnerKind
from ..schedules import DiscountSchedule, ScheduleKind
from ..settings import (
    DISCOUNTED_OCO_DEFAULT_ALPHA,
    DISCOUNTED_OCO_DEFAULT_CONFORMAL_LAMBDA,
    DISCOUNTED_OCO_DEFAULT_EPS,
    DISCOUNTED_OCO_LCE_WINDOW,
    DISCOUNTED_OCO_MAGDIS_V_INIT,
    DISCOUNTED_OCO_SCHEDULE_FLOOR,
)


class StreamKind(str, Enum):
    """Synthetic environments"""
    RADEMACHER = "rademacher"
    PIECEWISE_LINEAR = "piecewise_linear"
    QUANTILE_SHIFT = "quantile_shift"
    RANDOM_LINEAR = "random_linear"


class ShiftMode(str, Enum):
    SUDDEN = "sudden"
    GRADUAL = "gradual"


class Segment(BaseModel):
    """One stationary stretch of a piecewise stream"""
    duration: int = Field(..., ge=1, description="Rounds in the segment")
    optimum: List[float] = Field(..., min_length=1, description="Minimizer of the segment's losses")
    gradient_bound: float = Field(1.0, gt=0.0, description="Gradient norm inside the segment")

    model_config = ConfigDict(extra="forbid")


class StreamSpec(BaseModel):
    """Schema for a synthetic loss or radius stream"""
    kind: StreamKind = Field(..., description="Stream family")
    horizon: int = Field(..., ge=1, description="Number of rounds T")
    seed: int = Field(0, ge=0, lt=2**64, description="Base seed")
    dim: int = Field(1, ge=1, description="Dimension of the decision variable")
    gradient_bound: float = Field(1.0, gt=0.0, description="Upper bound G on gradient norms")
    # rademacher
    comparator: Optional[List[float]] = Field(None, description="Direction u of the adversary")
    variance_budget: Optional[float] = Field(None, gt=0.0, description="Target V_T")
    # piecewise_linear
    segments: List[Segment] = Field(default_factory=list, description="Stationary segments")
    # quantile_shift
    mode: ShiftMode = Field(ShiftMode.SUDDEN, description="How the level moves between periods")
    shift_period: int = Field(500, ge=1, description="Rounds between level changes")
    levels: List[float] = Field(default_factory=list, description="Level sequence, cycled")
    level_range: Tuple[float, float] = Field((0.1, 1.0), description="Range for drawn levels")
    noise_scale: float = Field(0.1, ge=0.0, description="Std of the folded Gaussian")

    model_config = ConfigDict(extra="forbid")

    @field_validator("levels")
    @classmethod
    def _levels_nonnegative(cls, v):
        if any(level < 0 for level in v):
            raise ValueError(f"Levels must be nonnegative, got {v}")
        return v

    @model_validator(mode="after")
    def _check_kind_fields(self):
        if self.kind == StreamKind.RADEMACHER:
            if self.comparator is None or self.variance_budget is None:
                raise ValueError("rademacher streams need comparator and variance_budget")
            if len(self.comparator) != self.dim:
                raise ValueError(f"comparator has length {len(self.comparator)}, dim is {self.dim}")
            if not any(c != 0 for c in self.comparator):
                raise ValueError("rademacher comparator must be nonzero")
        if self.kind == StreamKind.PIECEWISE_LINEAR:
            if not self.segments:
                raise ValueError("piecewise_linear streams need at least one segment")
            for seg in self.segments:
                if len(seg.optimum) != self.dim:
                    raise ValueError(f"segment optimum {seg.optimum} does not match dim {self.dim}")
        if self.kind == StreamKind.QUANTILE_SHIFT:
            lo, hi = self.level_range
            if not 0 <= lo <= hi:
                raise ValueError(f"level_range must satisfy 0 <= lo <= hi, got {self.level_range}")
        return self

    @property
    def is_radius_stream(self) -> bool:
        return self.kind == StreamKind.QUANTILE_SHIFT


class ScheduleSpec(BaseModel):
    """Schema for a discount schedule"""
    kind: ScheduleKind = Field(ScheduleKind.CONSTANT, description="Schedule shape")
    lam: float = Field(1.0, gt=0.0, description="Constant or base discount factor")
    pieces: List[Tuple[int, float]] = Field(default_factory=list, description="(start_index, lam)")
    restarts: List[int] = Field(default_factory=list, description="1-based restart rounds")
    values: List[float] = Field(default_factory=list, description="Explicit lambda_0, lambda_1, ...")
    floor: float = Field(DISCOUNTED_OCO_SCHEDULE_FLOOR, gt=0.0, description="Smallest admissible lambda")

    model_config = ConfigDict(extra="forbid")

    def to_schedule(self) -> DiscountSchedule:
        return DiscountSchedule(
            kind=self.kind,
            lam=self.lam,
            pieces=tuple((int(s), float(v)) for s, v in self.pieces),
            restarts=frozenset(self.restarts),
            values=tuple(self.values),
            floor=self.floor,
        )


class LearnerSpec(BaseModel):
    """Schema for one learner of an experiment"""
    id: str = Field(..., min_length=1, description="Unique learner id used in file names")
    kind: LearnerKind = Field(..., description="Algorithm")
    eps: float = Field(DISCOUNTED_OCO_DEFAULT_EPS, gt=0.0, description="Magnitude learner epsilon")
    v_init: float = Field(DISCOUNTED_OCO_MAGDIS_V_INIT, gt=0.0, description="Initial v for magdis")
    bias: Optional[List[float]] = Field(None, description="Inductive bias of the vector learner")
    domain: Literal["interval", "ball", "unconstrained", "nonnegative"] = Field(
        "unconstrained", description="Feasible set of the OGD baselines"
    )
    lo: float = Field(-1.0, description="Interval lower end")
    hi: float = Field(1.0, description="Interval upper end")
    radius: float = Field(1.0, gt=0.0, description="Ball radius")
    D: Optional[float] = Field(None, gt=0.0, description="Diameter used by the step size")
    G: float = Field(1.0, gt=0.0, description="Gradient bound used by the step size")
    d_est: Optional[float] = Field(None, gt=0.0, description="Offline estimate of D for sf_ogd")
    eta: float = Field(0.1, gt=0.0, description="Step size of l2_ogd, scale c of linear_ftrl")
    gamma: Optional[float] = Field(None, ge=0.0, description="l2_ogd regularization")

    model_config = ConfigDict(extra="forbid")

    @field_validator("id")
    @classmethod
    def _id_is_filename_safe(cls, v):
        if any(ch in v for ch in "/\\ "):
            raise ValueError(f"Learner id must not contain path separators or spaces: {v!r}")
        return v


class OutputSpec(BaseModel):
    """Where reports go"""
    directory: str = Field("runs", description="Output directory")
    write_ledgers: bool = Field(True, description="Write per-trial JSON-lines ledgers")
    write_series: bool = Field(True, description="Write per-trial local coverage tables")

    model_config = ConfigDict(extra="forbid")


class ExperimentConfig(BaseModel):
    """Schema for a whole experiment"""
    name: str = Field("experiment", description="Experiment name")
    learners: List[LearnerSpec] = Field(..., min_length=1, description="Learners to compare")
    environment: StreamSpec = Field(..., description="Loss or radius stream")
    schedule: ScheduleSpec = Field(default_factory=ScheduleSpec, description="Discount schedule")
    trials: int = Field(1, ge=1, description="Independent trials per learner")
    seed: Optional[int] = Field(None, ge=0, description="Base seed, overrides environment.seed")
    alpha: float = Field(DISCOUNTED_OCO_DEFAULT_ALPHA, gt=0.0, lt=1.0, description="Target miscoverage")
    loss: Literal["pinball", "skewed_quadratic"] = Field("pinball", description="Radius loss")
    comparator_grid: List[Union[float, List[float]]] = Field(
        default_factory=list, description="Comparators for regret and bound checks"
    )
    taus: List[int] = Field(default_factory=lambda: [1], description="Stability window lengths")
    lce_window: int = Field(DISCOUNTED_OCO_LCE_WINDOW, ge=1, description="Local coverage window k")
    outputs: OutputSpec = Field(default_factory=OutputSpec, description="Report paths")

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _check_consistency(self):
        ids = [spec.id for spec in self.learners]
        if len(set(ids)) != len(ids):
            raise ValueError(f"Learner ids must be unique, got {ids}")
        if self.seed is not None:
            self.environment.seed = self.seed
        if self.environment.is_radius_stream and "schedule" not in self.model_fields_set:
            self.schedule = ScheduleSpec(lam=DISCOUNTED_OCO_DEFAULT_CONFORMAL_LAMBDA)
        if any(tau < 1 for tau in self.taus):
            raise ValueError(f"Stability windows must be >= 1, got {self.taus}")
        dim = self.environment.dim
        for u in self.comparator_grid:
            width = 1 if isinstance(u, (int, float)) else len(u)
            if width != dim and width != 1:
                raise ValueError(f"Comparator {u} does not match dim {dim}")
        if self.environment.is_radius_stream and self.lce_window > self.environment.horizon:
            raise ValueError(
                f"lce_window {self.lce_window} exceeds horizon {self.environment.horizon}"
            )
        return self

    @property
    def protocol(self) -> str:
        return "ocp" if self.environment.is_radius_stream else "oco"

    def learner_ids(self) -> List[str]:
        return [spec.id for spec in self.learners]

    def snapshot(self) -> Dict:
        return self.model_dump(mode="json")

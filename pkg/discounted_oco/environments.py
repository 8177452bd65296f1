"""
Synthetic loss and radius streams.

Every stream is a pure function of (spec, trial): randomness comes from a
counter-based Philox generator keyed by (seed, trial, stream tag).
"""
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from .conformal import RadiusLossKind, radius_loss
from .exceptions import DomainError
from .schedules import DiscountSchedule, effective_horizon
from .settings import DISCOUNTED_OCO_PRNG
from .utils.validation import ShiftMode, StreamKind, StreamSpec

logger = logging.getLogger(__name__)

_STREAM_TAGS = {
    StreamKind.RADEMACHER: 1,
    StreamKind.PIECEWISE_LINEAR: 2,
    StreamKind.QUANTILE_SHIFT: 3,
    StreamKind.RANDOM_LINEAR: 4,
}


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Philox generator keyed by the seed and any further integer keys"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


# Loss descriptors


@dataclass(frozen=True)
class LinearLoss:
    """l(x) = <g, x>"""
    g: tuple
    kind: str = "linear"

    def value(self, x) -> float:
        return float(np.dot(self.g, np.atleast_1d(np.asarray(x, dtype=float))))

    def gradient(self, x) -> np.ndarray:
        return np.asarray(self.g, dtype=float)


@dataclass(frozen=True)
class DistanceLoss:
    """l(x) = scale * ||x - optimum||; absolute loss in one dimension"""
    optimum: tuple
    scale: float = 1.0
    kind: str = "distance"

    def value(self, x) -> float:
        diff = np.atleast_1d(np.asarray(x, dtype=float)) - np.asarray(self.optimum)
        return self.scale * float(np.linalg.norm(diff))

    def gradient(self, x) -> np.ndarray:
        diff = np.atleast_1d(np.asarray(x, dtype=float)) - np.asarray(self.optimum)
        norm = float(np.linalg.norm(diff))
        if norm == 0.0:
            return np.zeros_like(diff)
        return self.scale * diff / norm


@dataclass(frozen=True)
class _RadiusLoss:
    r_star: float
    alpha: float
    kind: str = ""

    def value(self, r) -> float:
        return radius_loss(RadiusLossKind(self.kind), _radius(r), self.r_star, self.alpha)[0]

    def gradient(self, r) -> np.ndarray:
        return np.array([radius_loss(RadiusLossKind(self.kind), _radius(r), self.r_star, self.alpha)[1]])


@dataclass(frozen=True)
class PinballLoss(_RadiusLoss):
    kind: str = "pinball"


@dataclass(frozen=True)
class SkewedQuadraticLoss(_RadiusLoss):
    kind: str = "skewed_quadratic"


def _radius(r) -> float:
    return float(np.asarray(r, dtype=float).reshape(-1)[0])


Loss = Union[LinearLoss, DistanceLoss, PinballLoss, SkewedQuadraticLoss]

_LOSS_TYPES = {
    "linear": LinearLoss,
    "distance": DistanceLoss,
    "pinball": PinballLoss,
    "skewed_quadratic": SkewedQuadraticLoss,
}


def loss_to_dict(loss: Loss) -> Dict[str, Any]:
    if isinstance(loss, LinearLoss):
        return {"kind": loss.kind, "g": list(loss.g)}
    if isinstance(loss, DistanceLoss):
        return {"kind": loss.kind, "optimum": list(loss.optimum), "scale": loss.scale}
    return {"kind": loss.kind, "r_star": loss.r_star, "alpha": loss.alpha}


def loss_from_dict(data: Dict[str, Any]) -> Loss:
    """
    Rebuild a loss descriptor from its serialized form.

    Raises:
        DomainError: for an unknown kind
    """
    data = dict(data)
    kind = data.pop("kind", None)
    if kind not in _LOSS_TYPES:
        raise DomainError(f"Unsupported loss kind: {kind}")
    if kind == "linear":
        return LinearLoss(g=tuple(data["g"]))
    if kind == "distance":
        return DistanceLoss(optimum=tuple(data["optimum"]), scale=data.get("scale", 1.0))
    return _LOSS_TYPES[kind](r_star=data["r_star"], alpha=data["alpha"])


def radius_loss_for(kind: str, r_star: float, alpha: float) -> Loss:
    return _LOSS_TYPES[RadiusLossKind(kind).value](r_star=float(r_star), alpha=alpha)


# Streams


@dataclass
class Stream:
    """
    A materialized environment.

    OCO streams carry ``losses``; radius streams carry ``r_star`` together with
    the hidden ceiling D (max r_star), which is only used for bound evaluation.
    """

    spec: StreamSpec
    trial: int = 0
    losses: List[Loss] = field(default_factory=list)
    r_star: Optional[np.ndarray] = None
    levels: Optional[np.ndarray] = None
    hidden_ceiling: Optional[float] = None

    @property
    def horizon(self) -> int:
        return self.spec.horizon

    @property
    def is_radius_stream(self) -> bool:
        return self.r_star is not None


def rademacher_stream(spec: StreamSpec, schedule: DiscountSchedule, trial: int = 0) -> np.ndarray:
    """
    Gradients L * eps_t * u / ||u|| with i.i.d. random signs.

    L = sqrt(V / H_T), so the realized discounted variance equals the budget V.

    Returns:
        Array of shape (T, dim)

    Raises:
        DomainError: if the budget lies outside (0, G^2 H_T]
    """
    if spec.kind != StreamKind.RADEMACHER:
        raise DomainError(f"Expected a rademacher spec, got {spec.kind.value}")
    u = np.asarray(spec.comparator, dtype=float)
    u_norm = float(np.linalg.norm(u))
    if u_norm == 0.0:
        raise DomainError("rademacher comparator must be nonzero")
    T = spec.horizon
    H = effective_horizon(schedule, T)
    V = float(spec.variance_budget)
    G = spec.gradient_bound
    if not 0 < V <= G * G * H * (1.0 + 1e-12):
        raise DomainError(f"Variance budget {V} outside (0, G^2 H_T] = (0, {G * G * H}]")
    L = math.sqrt(V / H)
    rng = make_rng(spec.seed, trial, _STREAM_TAGS[StreamKind.RADEMACHER])
    signs = rng.integers(0, 2, size=T) * 2 - 1
    return (L * signs)[:, None] * (u / u_norm)[None, :]


def random_linear_stream(spec: StreamSpec, trial: int = 0) -> np.ndarray:
    """
    Linear-loss gradients drawn uniformly from the ball of radius G.

    Returns:
        Array of shape (T, dim)
    """
    rng = make_rng(spec.seed, trial, _STREAM_TAGS[StreamKind.RANDOM_LINEAR])
    T, d, G = spec.horizon, spec.dim, spec.gradient_bound
    if d == 1:
        return rng.uniform(-G, G, size=(T, 1))
    direction = rng.standard_normal((T, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = G * rng.uniform(0.0, 1.0, size=(T, 1)) ** (1.0 / d)
    return direction * radius


def piecewise_linear_stream(spec: StreamSpec) -> List[DistanceLoss]:
    """
    Distance losses whose optimum switches between segments.

    Segments are cycled until the horizon is filled. Each loss has gradient
    norm equal to its segment's bound away from the optimum.
    """
    losses: List[DistanceLoss] = []
    while len(losses) < spec.horizon:
        for seg in spec.segments:
            loss = DistanceLoss(optimum=tuple(seg.optimum), scale=seg.gradient_bound)
            losses.extend([loss] * seg.duration)
    return losses[: spec.horizon]


def _segment_levels(spec: StreamSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    if spec.levels:
        return np.array([spec.levels[k % len(spec.levels)] for k in range(n)], dtype=float)
    lo, hi = spec.level_range
    return rng.uniform(lo, hi, size=n)


def quantile_shift_stream(spec: StreamSpec, trial: int = 0) -> Stream:
    """
    Optimal radii r*_t = |Normal(level_t, noise)| with a shifting level.

    Sudden mode holds each level for ``shift_period`` rounds; gradual mode
    interpolates linearly towards the next level across each period.
    """
    rng = make_rng(spec.seed, trial, _STREAM_TAGS[StreamKind.QUANTILE_SHIFT])
    T, P = spec.horizon, spec.shift_period
    n_segments = -(-T // P)
    seg_levels = _segment_levels(spec, n_segments + 1, rng)
    t = np.arange(T)
    k = t // P
    if spec.mode == ShiftMode.SUDDEN:
        levels = seg_levels[k]
    else:
        frac = (t % P) / P
        levels = seg_levels[k] + (seg_levels[k + 1] - seg_levels[k]) * frac
    if spec.noise_scale > 0:
        r_star = np.abs(levels + spec.noise_scale * rng.standard_normal(T))
    else:
        r_star = np.abs(levels)
    return Stream(
        spec=spec,
        trial=trial,
        r_star=r_star,
        levels=levels,
        hidden_ceiling=float(r_star.max()),
    )


def build_stream(spec: StreamSpec, schedule: DiscountSchedule, trial: int = 0) -> Stream:
    """
    Materialize the stream of a given trial.

    Raises:
        DomainError: for an unsupported stream kind
    """
    if spec.kind == StreamKind.RADEMACHER:
        grads = rademacher_stream(spec, schedule, trial)
        return Stream(spec=spec, trial=trial, losses=[LinearLoss(g=tuple(g)) for g in grads.tolist()])
    if spec.kind == StreamKind.RANDOM_LINEAR:
        grads = random_linear_stream(spec, trial)
        return Stream(spec=spec, trial=trial, losses=[LinearLoss(g=tuple(g)) for g in grads.tolist()])
    if spec.kind == StreamKind.PIECEWISE_LINEAR:
        return Stream(spec=spec, trial=trial, losses=piecewise_linear_stream(spec))
    if spec.kind == StreamKind.QUANTILE_SHIFT:
        return quantile_shift_stream(spec, trial)
    raise DomainError(f"Unsupported stream kind: {spec.kind}")


def dump_stream(stream: Stream, path: Union[str, Path]) -> Path:
    """
    Write a stream to JSON lines: a header, then one line per round.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        header = {
            "prng": DISCOUNTED_OCO_PRNG,
            "trial": stream.trial,
            "spec": stream.spec.model_dump(mode="json"),
        }
        fh.write(json.dumps(header) + "\n")
        if stream.is_radius_stream:
            for t, r in enumerate(stream.r_star.tolist(), start=1):
                fh.write(json.dumps({"t": t, "r_star": r}) + "\n")
        else:
            for t, loss in enumerate(stream.losses, start=1):
                fh.write(json.dumps({"t": t, "loss": loss_to_dict(loss)}) + "\n")
    logger.debug("Wrote %d rounds to %s", stream.horizon, path)
    return path


def comparator_vector(u: Union[float, Sequence[float]], dim: int) -> np.ndarray:
    """Broadcast a scalar or list comparator to a dim-vector"""
    arr = np.atleast_1d(np.asarray(u, dtype=float))
    if arr.shape[0] == 1 and dim > 1:
        return np.full(dim, arr[0])
    return arr

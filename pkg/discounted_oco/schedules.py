"""
Discount-factor sequences and the quantities derived from them.

Indexing follows the interaction protocol: a schedule emits lambda_i for
i >= 0 and round t (1-based) is updated with lambda_{t-1}.
"""
import bisect
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .exceptions import DomainError
from .settings import DISCOUNTED_OCO_SCHEDULE_FLOOR

logger = logging.getLogger(__name__)


class ScheduleKind(str, Enum):
    """Supported discount schedule shapes"""
    CONSTANT = "constant"
    PIECEWISE = "piecewise"
    RESTART = "restart"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class DiscountSchedule:
    """
    A sequence of strictly positive discount factors.

    constant: every lambda equals ``lam``.
    piecewise: ``pieces`` is a list of (start_index, lam); lambda_i takes the
        value of the last piece with start_index <= i, and 1 before the first.
    restart: lambda equals ``lam`` except on restart rounds, where the factor
        received at that round (lambda_{round-1}) drops to the floor.
    explicit: ``values[i]`` is lambda_i.
    """

    kind: ScheduleKind = ScheduleKind.CONSTANT
    lam: float = 1.0
    pieces: Tuple[Tuple[int, float], ...] = ()
    restarts: frozenset = field(default_factory=frozenset)
    values: Tuple[float, ...] = ()
    floor: float = DISCOUNTED_OCO_SCHEDULE_FLOOR

    def __post_init__(self):
        object.__setattr__(self, "kind", ScheduleKind(self.kind))
        if not self.floor > 0:
            raise DomainError(f"Schedule floor must be positive, got {self.floor}")
        candidates = [self.lam] + [p[1] for p in self.pieces] + list(self.values)
        for lam in candidates:
            if not math.isfinite(lam) or lam <= 0:
                raise DomainError(f"Discount factors must lie in (0, inf), got {lam}")
        if self.kind == ScheduleKind.PIECEWISE:
            if not self.pieces:
                raise DomainError("Piecewise schedule needs at least one piece")
            starts = [p[0] for p in self.pieces]
            if starts != sorted(starts) or len(set(starts)) != len(starts):
                raise DomainError(f"Piece starts must be strictly increasing, got {starts}")
        if self.kind == ScheduleKind.EXPLICIT and not self.values:
            raise DomainError("Explicit schedule needs at least one value")
        if any(r < 1 for r in self.restarts):
            raise DomainError(f"Restart rounds are 1-based, got {sorted(self.restarts)}")

    @classmethod
    def constant(cls, lam: float) -> "DiscountSchedule":
        return cls(kind=ScheduleKind.CONSTANT, lam=lam)

    @classmethod
    def unit(cls) -> "DiscountSchedule":
        """The undiscounted schedule lambda = 1"""
        return cls(kind=ScheduleKind.CONSTANT, lam=1.0)

    @classmethod
    def piecewise(cls, pieces: Iterable[Tuple[int, float]]) -> "DiscountSchedule":
        return cls(kind=ScheduleKind.PIECEWISE, pieces=tuple((int(s), float(v)) for s, v in pieces))

    @classmethod
    def restart(cls, rounds: Iterable[int], lam: float = 1.0) -> "DiscountSchedule":
        return cls(kind=ScheduleKind.RESTART, lam=lam, restarts=frozenset(int(r) for r in rounds))

    @classmethod
    def explicit(cls, values: Sequence[float]) -> "DiscountSchedule":
        return cls(kind=ScheduleKind.EXPLICIT, values=tuple(float(v) for v in values))

    @property
    def is_constant(self) -> bool:
        return self.kind == ScheduleKind.CONSTANT

    def value(self, i: int) -> float:
        """
        Return lambda_i.

        Raises:
            DomainError: for negative i or an index past an explicit sequence
        """
        if i < 0:
            raise DomainError(f"Schedule index must be >= 0, got {i}")
        if self.kind == ScheduleKind.CONSTANT:
            lam = self.lam
        elif self.kind == ScheduleKind.PIECEWISE:
            starts = [p[0] for p in self.pieces]
            pos = bisect.bisect_right(starts, i) - 1
            lam = self.pieces[pos][1] if pos >= 0 else 1.0
        elif self.kind == ScheduleKind.RESTART:
            lam = self.floor if (i + 1) in self.restarts else self.lam
        else:
            if i >= len(self.values):
                raise DomainError(
                    f"Explicit schedule has {len(self.values)} values, index {i} requested"
                )
            lam = self.values[i]
        return max(lam, self.floor)

    def lambdas(self, horizon: int) -> np.ndarray:
        """lambda_0 .. lambda_{horizon-1} as an array"""
        if self.kind == ScheduleKind.CONSTANT:
            return np.full(horizon, max(self.lam, self.floor))
        return np.array([self.value(i) for i in range(horizon)], dtype=float)

    def describe(self) -> str:
        if self.kind == ScheduleKind.CONSTANT:
            return f"constant({self.lam})"
        if self.kind == ScheduleKind.PIECEWISE:
            return f"piecewise({list(self.pieces)})"
        if self.kind == ScheduleKind.RESTART:
            return f"restart(lam={self.lam}, rounds={sorted(self.restarts)})"
        return f"explicit(n={len(self.values)})"


@dataclass(frozen=True)
class DiscountedMoments:
    """Effective horizon H, discounted variance V and discounted Lipschitz constant G"""

    H: float = 0.0
    V: float = 0.0
    G: float = 0.0


def update_moments(m: DiscountedMoments, g_norm: float, lambda_prev: float) -> DiscountedMoments:
    """
    Advance (H, V, G) by one round.

    H' = lambda^2 H + 1, V' = lambda^2 V + g^2, G' = max(lambda G, g).

    Raises:
        DomainError: on a negative or non-finite gradient norm, or a nonpositive lambda
    """
    if not math.isfinite(g_norm) or g_norm < 0:
        raise DomainError(f"Gradient norm must be finite and >= 0, got {g_norm}")
    if not math.isfinite(lambda_prev) or lambda_prev <= 0:
        raise DomainError(f"Discount factor must lie in (0, inf), got {lambda_prev}")
    lam2 = lambda_prev * lambda_prev
    return DiscountedMoments(
        H=lam2 * m.H + 1.0,
        V=lam2 * m.V + g_norm * g_norm,
        G=max(lambda_prev * m.G, g_norm),
    )


def moments_history(
    g_norms: Sequence[float], lambdas_prev: Sequence[float]
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Run update_moments over a whole sequence.

    Args:
        g_norms: ||g_t|| for t = 1..T
        lambdas_prev: lambda_{t-1} for t = 1..T

    Returns:
        Arrays (H, V, G) of length T holding the moments after each round
    """
    T = len(g_norms)
    H, V, G = np.zeros(T), np.zeros(T), np.zeros(T)
    m = DiscountedMoments()
    for t in range(T):
        m = update_moments(m, float(g_norms[t]), float(lambdas_prev[t]))
        H[t], V[t], G[t] = m.H, m.V, m.G
    return H, V, G


def effective_horizon(schedule: DiscountSchedule, t: int) -> float:
    """
    H_t = sum_{i=1}^{t} prod_{j=i}^{t-1} lambda_j^2, built incrementally.

    Raises:
        DomainError: if t < 1
    """
    if t < 1:
        raise DomainError(f"Round index must be >= 1, got {t}")
    H = 0.0
    for i in range(1, t + 1):
        lam = schedule.value(i - 1)
        H = lam * lam * H + 1.0
    return H


def forgetting_multiplier(
    schedule: DiscountSchedule, from_round: int, to_round: int, lambdas: Optional[np.ndarray] = None
) -> float:
    """
    prod_{t=from_round}^{to_round-1} lambda_t; 1 for an empty window.

    Raises:
        DomainError: if from_round > to_round
    """
    if from_round > to_round:
        raise DomainError(f"Inverted window [{from_round}, {to_round})")
    if from_round < 0:
        raise DomainError(f"Schedule index must be >= 0, got {from_round}")
    if from_round == to_round:
        return 1.0
    if schedule.is_constant:
        return max(schedule.lam, schedule.floor) ** (to_round - from_round)
    if lambdas is None:
        lambdas = schedule.lambdas(to_round)
    return float(np.prod(lambdas[from_round:to_round]))

"""
Imaginary error function and the FTRL potential.

erfi here is the integral of exp(u^2) from 0 to x, i.e. sqrt(pi)/2 times the
conventional erfi. Evaluation uses the Maclaurin series up to a cutoff and the
asymptotic expansion of the scaled function beyond it.
"""
import logging
import math
from dataclasses import dataclass
from typing import Tuple

from ..exceptions import DomainError
from ..settings import DISCOUNTED_OCO_ERFI_SERIES_CUTOFF, DISCOUNTED_OCO_EXP_CLAMP

logger = logging.getLogger(__name__)

_SERIES_RTOL = 1e-17
_SERIES_MAX_TERMS = 400
_ASYMPTOTIC_MAX_TERMS = 200


@dataclass(frozen=True)
class PotentialArgs:
    """Arguments (v, s, h, eps) of the potential"""

    v: float
    s: float
    h: float
    eps: float

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.v, self.s, self.h, self.eps)):
            raise DomainError(f"Non-finite potential arguments: {self}")
        if self.v < 0 or self.h < 0:
            raise DomainError(f"v and h must be nonnegative, got v={self.v}, h={self.h}")
        if self.eps <= 0:
            raise DomainError(f"eps must be positive, got {self.eps}")

    @property
    def radicand(self) -> float:
        return self.v + 2.0 * self.h * self.s + 16.0 * self.h * self.h


def stable_exp(x: float, clamp: float = DISCOUNTED_OCO_EXP_CLAMP) -> Tuple[float, bool]:
    """
    exp(x) with the argument clamped from above.

    Args:
        x: Finite exponent
        clamp: Largest exponent evaluated

    Returns:
        Tuple of (value, saturated) where saturated is True if x was clamped
    """
    if x > clamp:
        return math.exp(clamp), True
    return math.exp(x), False


def _erfi_series(x: float) -> float:
    # sum_n x^(2n+1) / (n! (2n+1)); all terms share the sign of x
    x2 = x * x
    power = x
    total = x
    for n in range(1, _SERIES_MAX_TERMS):
        power *= x2 / n
        term = power / (2 * n + 1)
        total += term
        if n > x2 and abs(term) <= _SERIES_RTOL * abs(total):
            break
    return total


def _erfi_asymptotic(x: float, clamp: float) -> Tuple[float, bool]:
    # exp(x^2)/(2x) * sum_k (2k-1)!! / (2x^2)^k, truncated at the smallest term
    inv = 1.0 / (2.0 * x * x)
    term = 1.0
    total = 1.0
    for k in range(1, _ASYMPTOTIC_MAX_TERMS):
        nxt = term * (2 * k - 1) * inv
        if nxt >= term:
            break
        term = nxt
        total += term
        if term <= _SERIES_RTOL * total:
            break
    scale, saturated = stable_exp(x * x, clamp)
    return scale / (2.0 * x) * total, saturated


def erfi_with_flag(x: float, clamp: float = DISCOUNTED_OCO_EXP_CLAMP) -> Tuple[float, bool]:
    """
    erfi(x) together with a saturation flag.

    Raises:
        DomainError: if x is not finite
    """
    if not math.isfinite(x):
        raise DomainError(f"erfi requires a finite argument, got {x}")
    ax = abs(x)
    if ax <= DISCOUNTED_OCO_ERFI_SERIES_CUTOFF:
        return _erfi_series(x), False
    value, saturated = _erfi_asymptotic(ax, clamp)
    return math.copysign(value, x), saturated


def erfi(x: float) -> float:
    """
    Integral of exp(u^2) over [0, x].

    Args:
        x: Finite real

    Returns:
        erfi(x); odd and strictly increasing
    """
    value, saturated = erfi_with_flag(x)
    if saturated:
        logger.warning("erfi(%r) saturated the exponent clamp", x)
    return value


def potential(args: PotentialArgs) -> float:
    """
    Evaluate the FTRL potential eps*sqrt(R)*(2*I(z) - 1).

    R = v + 2hs + 16h^2, z = s / (2 sqrt(R)), and I(z) is the integral of erfi
    over [0, z], taken in closed form as z*erfi(z) - (exp(z^2) - 1)/2. The
    derivative in s is the unprojected magnitude prediction.

    Raises:
        DomainError: if h is zero or the radicand is not positive
    """
    if args.h <= 0:
        raise DomainError(f"potential requires h > 0, got {args.h}")
    radicand = args.radicand
    if radicand <= 0:
        raise DomainError(f"Nonpositive radicand {radicand} for {args}")
    root = math.sqrt(radicand)
    z = args.s / (2.0 * root)
    ez, saturated = stable_exp(z * z)
    if saturated:
        logger.warning("potential saturated at z=%r", z)
    inner = z * erfi_with_flag(z)[0] - 0.5 * (ez - 1.0)
    return args.eps * root * (2.0 * inner - 1.0)

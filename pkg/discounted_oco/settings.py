"""
Default settings for discounted-oco.
Every value can be overridden through an environment variable of the same name.
"""
import os


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    return float(raw) if raw not in (None, "") else default


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    return int(raw) if raw not in (None, "") else default


# Numerics
DISCOUNTED_OCO_EXP_CLAMP = _env_float("DISCOUNTED_OCO_EXP_CLAMP", 700.0)
DISCOUNTED_OCO_ERFI_SERIES_CUTOFF = _env_float("DISCOUNTED_OCO_ERFI_SERIES_CUTOFF", 6.0)

# Schedules
DISCOUNTED_OCO_SCHEDULE_FLOOR = _env_float("DISCOUNTED_OCO_SCHEDULE_FLOOR", 1e-12)

# Learner defaults
DISCOUNTED_OCO_DEFAULT_EPS = _env_float("DISCOUNTED_OCO_DEFAULT_EPS", 1.0)
DISCOUNTED_OCO_MAGDIS_V_INIT = _env_float("DISCOUNTED_OCO_MAGDIS_V_INIT", 1e-6)

# Conformal defaults
DISCOUNTED_OCO_DEFAULT_ALPHA = _env_float("DISCOUNTED_OCO_DEFAULT_ALPHA", 0.1)
DISCOUNTED_OCO_DEFAULT_CONFORMAL_LAMBDA = _env_float(
    "DISCOUNTED_OCO_DEFAULT_CONFORMAL_LAMBDA", 0.999
)
DISCOUNTED_OCO_LCE_WINDOW = _env_int("DISCOUNTED_OCO_LCE_WINDOW", 100)

# Streams: counter-based generator, pinned per release
DISCOUNTED_OCO_PRNG = os.getenv("DISCOUNTED_OCO_PRNG", "philox-4x64/v1")

# Output
DISCOUNTED_OCO_FORMAT_VERSION = 1


def get_worker_count() -> int:
    """
    Number of worker threads for trial fan-out.

    Reads DISCOUNTED_OCO_THREADS at call time so tests and the CLI can
    change it without reloading the module.
    """
    cap = _env_int("DISCOUNTED_OCO_THREADS", 0)
    if cap > 0:
        return cap
    return min(8, os.cpu_count() or 1)

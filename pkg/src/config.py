import os
from pathlib import Path

from dotenv import load_dotenv

# Load .env from project root
load_dotenv(Path(__file__).resolve().parent.parent / ".env")


def _env_float(name: str, default: str) -> float:
    """Read a float from the environment. Raises ValueError naming the variable."""
    raw = os.getenv(name, default)
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{name} must be a number, got '{raw}'")


def _env_int(name: str, default: str) -> int:
    raw = os.getenv(name, default)
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got '{raw}'")


def _validate_unit_interval(name: str, value: float) -> float:
    """Ensure a fraction lies strictly inside (0, 1)."""
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")
    return value


def _validate_fraction(name: str, value: float) -> float:
    """Ensure a fraction lies in [0, 1)."""
    if not 0.0 <= value < 1.0:
        raise ValueError(f"{name} must lie in [0, 1), got {value}")
    return value


# Weight trees: splits must stay in (EPS_FLOOR, 1 - EPS_FLOOR)
EPS_FLOOR = _validate_unit_interval("DYADIC_EPS_FLOOR", _env_float("DYADIC_EPS_FLOOR", "1e-6"))

# Paraexponentials: sup |b_I h_I| <= 1 - PARAEXP_EPS
PARAEXP_EPS = _validate_unit_interval("DYADIC_PARAEXP_EPS", _env_float("DYADIC_PARAEXP_EPS", "1e-3"))

# Relative tolerance for comparisons that are not stated otherwise
REL_TOL = _env_float("DYADIC_REL_TOL", "1e-9")

# Bisection (counterexample construction)
BISECT_XTOL = _env_float("DYADIC_BISECT_XTOL", "1e-12")
BISECT_RESIDUAL = _env_float("DYADIC_BISECT_RESIDUAL", "1e-10")
BISECT_MAXITER = _env_int("DYADIC_BISECT_MAXITER", "200")

# Default fractions used to place P and P_lambda strictly inside their ranges
DELTA_MARGIN = _validate_unit_interval("DYADIC_DELTA_MARGIN", _env_float("DYADIC_DELTA_MARGIN", "0.5"))
OVERSHOOT = _validate_fraction("DYADIC_OVERSHOOT", _env_float("DYADIC_OVERSHOOT", "0.5"))

# Depth caps: exhaustive functionals walk 2^depth leaves
MAX_DEPTH = _env_int("DYADIC_MAX_DEPTH", "24")
MAX_PARAPRODUCT_DEPTH = _env_int("DYADIC_MAX_PARAPRODUCT_DEPTH", "14")

# Subset expansion visits 2^n subsets
ORACLE_MAX_N = _env_int("DYADIC_ORACLE_MAX_N", "20")

# Resolvent norm estimates
TRIALS = _env_int("DYADIC_TRIALS", "4")
POWER_ITERATIONS = _env_int("DYADIC_POWER_ITERATIONS", "30")
SEED = _env_int("DYADIC_SEED", "0")

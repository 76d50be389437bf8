"""Small input-validation helpers shared across modules."""
from __future__ import annotations

import numpy as np


def check_fips(fips: str) -> str:
    """A FIPS code is exactly five digits; the first two name the state."""
    if not (isinstance(fips, str) and len(fips) == 5 and fips.isdigit()):
        raise ValueError(f"malformed FIPS code {fips!r} (need 5 digits)")
    return fips


def state_prefix(fips: str) -> str:
    return check_fips(fips)[:2]


def check_square(matrix: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    return m


def check_probability(value: float, name: str = "alpha") -> float:
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")
    return value

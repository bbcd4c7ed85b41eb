"""Input validation helpers used at the public API boundaries."""
from __future__ import annotations

import numpy as np

from .errors import ConfigError


def check_sites(m: int, minimum: int = 1) -> int:
    m = int(m)
    if m < minimum:
        raise ConfigError(f"site count M must be >= {minimum}, got {m}")
    return m


def check_probability(p: float, name: str = "p") -> float:
    p = float(p)
    if not (0.0 <= p <= 1.0) or not np.isfinite(p):
        raise ConfigError(f"{name} must lie in [0, 1], got {p}")
    return p


def check_positive(x: float, name: str) -> float:
    x = float(x)
    if not np.isfinite(x) or x <= 0.0:
        raise ConfigError(f"{name} must be positive and finite, got {x}")
    return x


def check_finite(x, name: str):
    arr = np.asarray(x)
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} contains non-finite entries")
    return arr


def check_interval(lo: float, hi: float, name: str) -> tuple[float, float]:
    lo, hi = float(lo), float(hi)
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
        raise ConfigError(f"{name} must be a non-empty finite interval, got [{lo}, {hi}]")
    return lo, hi


def check_state_dim(amplitudes: np.ndarray, m: int) -> np.ndarray:
    amplitudes = np.asarray(amplitudes, dtype=np.complex128)
    if amplitudes.shape != (1 << m,):
        raise ConfigError(
            f"state dimension {amplitudes.shape} does not match 2^M = {1 << m} for M={m}"
        )
    return amplitudes


def check_max_distance(l: int, m: int) -> int:
    l = int(l)
    if l < 0 or l > m // 2:
        raise ConfigError(f"correlator distance L={l} out of range [0, floor(M/2)] for M={m}")
    return l

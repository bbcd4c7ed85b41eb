"""Drive protocols sampled on a uniform time grid.

Three families: squared-exponential Gaussian-process draws, single-tone
sinusoids, and single-step quenches.  All drives are stored as values on
the grid t_k = k * dt; consumers interpolate linearly between points and
hold the end values constant outside the grid, so a quench is sharp only
up to one grid interval.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigError
from .validation import check_positive

KIND_GP = "gp"
KIND_PERIODIC = "periodic"
KIND_QUENCH = "quench"
KIND_CONSTANT = "constant"
DRIVE_KINDS = (KIND_GP, KIND_PERIODIC, KIND_QUENCH, KIND_CONSTANT)

# hyperpriors, in units of J
GP_AMPLITUDE_RANGE = (0.0, 4.0)
GP_LENGTH_RANGE = (1.0, 9.0)
PERIODIC_AMPLITUDE_RANGE = (-3.0, 3.0)
PERIODIC_FREQUENCY_RANGE = (0.1, 4.0)
QUENCH_HEIGHT_RANGE = (-3.0, 3.0)
QUENCH_TIME_FRACTIONS = (0.1, 0.9)


@dataclass(frozen=True)
class DriveTrajectory:
    values: np.ndarray
    dt: float
    kind: str
    params: dict = field(default_factory=dict)
    t0: float = 0.0

    def __post_init__(self):
        check_positive(self.dt, "dt")
        if self.kind not in DRIVE_KINDS:
            raise ConfigError(f"unknown drive kind {self.kind!r}")
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] < 2:
            raise ConfigError("drive needs at least 2 grid values")
        object.__setattr__(self, "values", v)

    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_points)

    def value_at(self, t) -> np.ndarray:
        return np.interp(t, self.times, self.values)


@lru_cache(maxsize=64)
def _gp_factor(n_points: int, dt: float, sigma: float) -> np.ndarray:
    """Symmetric factor L with L L^T = unit-amplitude SE covariance."""
    k = np.arange(n_points)
    sq = (k[:, None] - k[None, :]) * dt
    cov = np.exp(-(sq * sq) / (2.0 * sigma * sigma))
    w, q = np.linalg.eigh(cov)
    w = np.clip(w, 0.0, None)  # eigh round-off can leave tiny negatives
    return q * np.sqrt(w)[None, :]


def gp_drive(n_points, dt, c0, sigma, rng) -> np.ndarray:
    """One draw from the stationary GP with cov c0 exp(-(t-t')^2 / 2 sigma^2)."""
    if c0 < 0:
        raise ConfigError(f"amplitude c0 must be >= 0, got {c0}")
    check_positive(sigma, "sigma")
    x = rng.standard_normal(n_points)
    return np.sqrt(c0) * (_gp_factor(int(n_points), float(dt), float(sigma)) @ x)


def periodic_drive(n_points, dt, amplitude, omega) -> np.ndarray:
    t = dt * np.arange(n_points)
    return amplitude * np.sin(omega * t)


def quench_drive(n_points, dt, h_before, h_after, k_jump) -> np.ndarray:
    if not 0 < k_jump < n_points:
        raise ConfigError(f"jump index {k_jump} outside (0, {n_points})")
    v = np.full(n_points, float(h_before))
    v[k_jump:] = h_after
    return v


def constant_drive(n_points, value) -> np.ndarray:
    return np.full(n_points, float(value))


def build_drive(kind: str, n_points: int, dt: float, params: dict) -> DriveTrajectory:
    """Deterministic drive from explicit parameters (no drawing)."""
    if kind == KIND_GP:
        raise ConfigError("gp drives have no closed parametric form; draw them")
    if kind == KIND_PERIODIC:
        values = periodic_drive(n_points, dt, params["amplitude"], params["omega"])
    elif kind == KIND_QUENCH:
        values = quench_drive(
            n_points, dt, params["h_before"], params["h_after"], params["k_jump"]
        )
    elif kind == KIND_CONSTANT:
        values = constant_drive(n_points, params["value"])
    else:
        raise ConfigError(f"unknown drive kind {kind!r}, expected one of {DRIVE_KINDS}")
    return DriveTrajectory(values=values, dt=dt, kind=kind, params=dict(params))


def sample_drive(kind: str, n_points: int, dt: float, rng,
                 params: dict | None = None) -> DriveTrajectory:
    """Draw one drive of the given kind with hyperparameters from the priors.

    Explicit ``params`` bypass the priors (fixed-drive datasets, tests); the
    rng is then untouched.  Draw order per kind is fixed; reproducibility of
    stored datasets depends on it.
    """
    if params is not None:
        return build_drive(kind, n_points, dt, params)
    if kind == KIND_GP:
        c0 = rng.uniform(*GP_AMPLITUDE_RANGE)
        sigma = rng.uniform(*GP_LENGTH_RANGE)
        values = gp_drive(n_points, dt, c0, sigma, rng)
        params = {"c0": c0, "sigma": sigma}
        return DriveTrajectory(values=values, dt=dt, kind=kind, params=params)
    if kind == KIND_PERIODIC:
        params = {
            "amplitude": rng.uniform(*PERIODIC_AMPLITUDE_RANGE),
            "omega": rng.uniform(*PERIODIC_FREQUENCY_RANGE),
        }
    elif kind == KIND_QUENCH:
        total = (n_points - 1) * dt
        lo, hi = QUENCH_TIME_FRACTIONS
        params = {
            "h_before": rng.uniform(*QUENCH_HEIGHT_RANGE),
            "h_after": rng.uniform(*QUENCH_HEIGHT_RANGE),
            # snapped down to the grid
            "k_jump": int(rng.uniform(lo * total, hi * total) / dt),
        }
    elif kind == KIND_CONSTANT:
        params = {"value": 0.0}
    else:
        raise ConfigError(f"unknown drive kind {kind!r}, expected one of {DRIVE_KINDS}")
    return build_drive(kind, n_points, dt, params)


def child_rng(root_seed: int, index: int, attempt: int = 0) -> np.random.Generator:
    """Stream for sample ``index``; stable under worker count and retries."""
    seq = np.random.SeedSequence(root_seed, spawn_key=(index, attempt))
    return np.random.default_rng(seq)

"""Canonical layout of the observable set.

A frame collects the site-averaged expectation values of the three local
Pauli operators and of every two-point correlator ``<s^a_j s^b_{j+l}>``
with ``a, b in {x, y, z}`` and ``l = 1..L``.  Every module (exact
simulator, moment closure, surrogate networks, reports) shares this flat
ordering, so their outputs are directly comparable:

    index 0..2          locals  <sx>, <sy>, <sz>
    index 3 + 9(l-1) + 3a + b   correlator (a, b) at distance l

Axis codes are 0=x, 1=y, 2=z.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

AXES = "xyz"


def time_grid(t_max: float, dt: float) -> np.ndarray:
    """Sample times 0, dt, ..., t_max (inclusive); t_max must sit on the grid."""
    n = int(round(t_max / dt))
    if abs(n * dt - t_max) > 1e-9 or n < 1:
        raise ValueError(f"t_max={t_max} is not a positive multiple of dt={dt}")
    return dt * np.arange(n + 1)


def max_distance(m: int) -> int:
    """Largest correlator distance on an M-site ring: floor(M/2)."""
    return m // 2


def n_observables(l_max: int) -> int:
    return 3 + 9 * l_max


def local_index(axis: int) -> int:
    return axis


def corr_index(axis_a: int, axis_b: int, dist: int) -> int:
    """Flat index of <s^a_j s^b_{j+dist}> for dist >= 1."""
    return 3 + 9 * (dist - 1) + 3 * axis_a + axis_b


def frame_labels(l_max: int) -> list[str]:
    labels = [f"s{AXES[a]}" for a in range(3)]
    for dist in range(1, l_max + 1):
        for a in range(3):
            for b in range(3):
                labels.append(f"{AXES[a]}{AXES[b]}_{dist}")
    return labels


def product_locals(p: float) -> np.ndarray:
    """Local expectation values of the single-site state sqrt(p)|0> + sqrt(1-p)|1>."""
    p = float(p)
    return np.array([2.0 * np.sqrt(p * (1.0 - p)), 0.0, 2.0 * p - 1.0])


def product_frame(p: float, l_max: int) -> np.ndarray:
    """Observable frame of the translationally invariant product state.

    Correlators factorize: <s^a s^b_{+l}> = <s^a><s^b> for every distance.
    """
    loc = product_locals(p)
    frame = np.empty(n_observables(l_max))
    frame[:3] = loc
    outer = np.outer(loc, loc).ravel()
    for dist in range(1, l_max + 1):
        frame[3 + 9 * (dist - 1): 3 + 9 * dist] = outer
    return frame


@dataclass
class ObservableSeries:
    """Observable frames on a uniform sample grid.

    times has shape (n,), frames (n, n_observables).  The optional entropy
    channel holds the half-chain von Neumann entropy at each sample time;
    closure output sets ``breakdown_time`` when the integration left the
    physical band and the series was truncated there.
    """

    times: np.ndarray
    frames: np.ndarray
    l_max: int
    entropy: np.ndarray | None = None
    breakdown_time: float | None = field(default=None)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.frames = np.asarray(self.frames, dtype=float)
        if self.frames.shape != (self.times.size, n_observables(self.l_max)):
            raise ValueError(
                f"frames shape {self.frames.shape} inconsistent with "
                f"{self.times.size} times and l_max={self.l_max}"
            )

    @property
    def n_steps(self) -> int:
        return self.times.size

    def truncated(self, n: int) -> "ObservableSeries":
        return ObservableSeries(
            self.times[:n],
            self.frames[:n],
            self.l_max,
            entropy=None if self.entropy is None else self.entropy[:n],
            breakdown_time=self.breakdown_time,
        )

"""Matrix-free Pauli-string application on computational-basis amplitudes.

Site j maps to bit j of the basis index (bit value 0 encodes the +1
eigenstate |0> of s^z, bit value 1 encodes |1>).  A product of single-site
Pauli operators on distinct sites acts as index-XOR plus a per-index phase:

    (P psi)[i] = phase(i) * psi[i ^ mask]

where x and y sites contribute their bit to ``mask`` and z and y sites
contribute diagonal factors (1 - 2 b_j(i)), with an extra -1j per y site.
Memory scales as 2^M; no dense 2^M x 2^M operator is ever formed.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .observables import corr_index, max_distance, n_observables

AXIS_X, AXIS_Y, AXIS_Z = 0, 1, 2


def bit_values(m: int, site: int) -> np.ndarray:
    """Bit of ``site`` for every basis index: shape (2^M,), values 0/1."""
    ix = np.arange(1 << m, dtype=np.int64)
    return (ix >> site) & 1


def string_action(m: int, items: tuple[tuple[int, int], ...]) -> tuple[int, np.ndarray]:
    """Flip mask and phase vector of ``prod_s sigma^axis_s`` over distinct sites.

    items is a tuple of (site, axis) pairs; returns (mask, phase) with phase
    of shape (2^M,), complex.
    """
    sites = [s for s, _ in items]
    if len(set(sites)) != len(sites):
        raise ValueError(f"sites must be distinct, got {sites}")
    mask = 0
    phase = np.ones(1 << m, dtype=np.complex128)
    for site, axis in items:
        if not 0 <= site < m:
            raise ValueError(f"site {site} out of range for M={m}")
        if axis == AXIS_X:
            mask ^= 1 << site
        elif axis == AXIS_Y:
            mask ^= 1 << site
            phase *= -1j * (1.0 - 2.0 * bit_values(m, site))
        elif axis == AXIS_Z:
            phase *= 1.0 - 2.0 * bit_values(m, site)
        else:
            raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    return mask, phase


def apply_string(psi: np.ndarray, m: int, items: tuple[tuple[int, int], ...]) -> np.ndarray:
    mask, phase = string_action(m, items)
    ix = np.arange(1 << m, dtype=np.int64)
    return phase * psi[ix ^ mask]


class MeasurementPlan:
    """Precompiled expectation evaluator for the full observable set of a ring.

    Evaluates all 3M local strings and all 9*L*M correlator strings of one
    state in a handful of vectorized operations; site averaging happens on
    top of the per-site values so a debug path to the unaveraged data stays
    available.
    """

    def __init__(self, m: int, l_max: int | None = None):
        self.m = int(m)
        self.l_max = max_distance(self.m) if l_max is None else int(l_max)
        if self.l_max > max_distance(self.m):
            raise ValueError(f"l_max={self.l_max} exceeds floor(M/2) for M={self.m}")
        dim = 1 << self.m
        strings: list[tuple[int, np.ndarray]] = []
        for site in range(self.m):
            for axis in range(3):
                strings.append(string_action(self.m, ((site, axis),)))
        for dist in range(1, self.l_max + 1):
            for axis_a in range(3):
                for axis_b in range(3):
                    for site in range(self.m):
                        strings.append(
                            string_action(
                                self.m,
                                ((site, axis_a), ((site + dist) % self.m, axis_b)),
                            )
                        )
        self._masks = np.array([s[0] for s in strings], dtype=np.int64)
        self._phases = np.array([s[1] for s in strings])
        self._ix = np.arange(dim, dtype=np.int64)
        self._gather = self._ix[None, :] ^ self._masks[:, None]

    def expectations_raw(self, psi: np.ndarray) -> np.ndarray:
        """Per-string complex expectation values, before any averaging."""
        flipped = psi[self._gather]
        return np.einsum("d,sd,sd->s", np.conj(psi), self._phases, flipped)

    def measure_sitewise(self, psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Unaveraged values: locals (M, 3) and correlators (L, 3, 3, M)."""
        vals = self.expectations_raw(psi)
        resid = np.max(np.abs(vals.imag)) if vals.size else 0.0
        if resid > 1e-10:
            raise FloatingPointError(
                f"expectation values have imaginary residue {resid:.3e} > 1e-10"
            )
        re = vals.real
        locals_ = re[: 3 * self.m].reshape(self.m, 3)
        corr = re[3 * self.m:].reshape(self.l_max, 3, 3, self.m)
        return locals_, corr

    def measure(self, psi: np.ndarray) -> np.ndarray:
        """Site-averaged observable frame in the canonical flat layout."""
        locals_, corr = self.measure_sitewise(psi)
        frame = np.empty(n_observables(self.l_max))
        frame[:3] = locals_.mean(axis=0)
        for dist in range(1, self.l_max + 1):
            for axis_a in range(3):
                for axis_b in range(3):
                    frame[corr_index(axis_a, axis_b, dist)] = corr[
                        dist - 1, axis_a, axis_b
                    ].mean()
        return frame


@lru_cache(maxsize=16)
def measurement_plan(m: int, l_max: int | None = None) -> MeasurementPlan:
    return MeasurementPlan(m, l_max)

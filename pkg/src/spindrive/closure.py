"""Moment equations for driven rings, closed by Gaussian factorization.

For each site-averaged moment (locals and two-point correlators up to
distance L) the Heisenberg equation d<O>/dt = i<[H, O]> is expanded
symbolically over Pauli strings at build time.  Commutators with bond
terms produce three-site strings; those are closed with the cumulant-style
factorization

    <ABC> = <AB><C> + <BC><A> + <AC><B> - 2<A><B><C>

on distinct sites.  On a ring every pair distance appearing this way wraps
back into 1..L, so the truncated set is self-contained.  The result is
compiled to flat term arrays (output index, coefficient, drive flag, up to
three factor indices) consumed by the adaptive RK kernel; an identity slot
at index n_obs pads terms of degree < 3.

Derived under translation invariance: uniform drive and a uniform product
initial state.  All derivative coefficients come out real; the build
asserts this.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import integrators
from .drives import DriveTrajectory
from .errors import ConfigError, IntegrationError
from .models import (
    KIND_HEISENBERG,
    KIND_TFI_LONGITUDINAL,
    IntegratorConfig,
    ProductStateSpec,
    SpinModel,
)
from .observables import (
    ObservableSeries,
    corr_index,
    max_distance,
    n_observables,
    product_frame,
)
from .qdyn import _check_times

#: moments beyond this magnitude mark loss of validity; Pauli expectation
#: values are bounded by 1, so 1.5 leaves room for honest truncation error
TRUST_BAND = 1.5

_LEVI = {(0, 1): (2, 1.0), (1, 2): (0, 1.0), (2, 0): (1, 1.0),
         (1, 0): (2, -1.0), (2, 1): (0, -1.0), (0, 2): (1, -1.0)}


def _string_mul(p: dict, q: dict):
    """Product of two Pauli strings as (phase, site->axis map)."""
    out = {}
    phase = 1.0 + 0.0j
    for site in set(p) | set(q):
        pa, qa = p.get(site), q.get(site)
        if pa is None:
            out[site] = qa
        elif qa is None:
            out[site] = pa
        elif pa == qa:
            continue
        else:
            axis, sign = _LEVI[(pa, qa)]
            phase *= 1j * sign
            out[site] = axis
    return phase, out


def _hamiltonian_strings(model: SpinModel):
    """(coefficient, site->axis map, is_drive) for every term of H."""
    terms = []
    for j in range(model.n_sites):
        terms.append((1.0, {j: 0}, True))
    for i, j in model.bonds():
        terms.append((model.coupling, {i: 2, j: 2}, False))
    if model.kind == KIND_TFI_LONGITUDINAL:
        for j in range(model.n_sites):
            terms.append((model.g, {j: 2}, False))
    return terms


def _pair_index(s1, a1, s2, a2, m, l_max):
    sep = (s2 - s1) % m
    if sep == 0:
        raise AssertionError("coincident sites must reduce before mapping")
    if sep <= l_max:
        return corr_index(a1, a2, sep)
    sep = m - sep
    if sep > l_max:
        raise AssertionError(f"pair distance {m - sep} not representable for L={l_max}")
    return corr_index(a2, a1, sep)


def _moment_factors(string: dict, m: int, l_max: int):
    """Expand a string's expectation into products of kept moments.

    Returns a list of (multiplier, [factor indices]); three-site strings
    come back as the four factorization terms.
    """
    sites = sorted(string)
    if len(sites) == 1:
        return [(1.0, [string[sites[0]]])]
    if len(sites) == 2:
        s1, s2 = sites
        return [(1.0, [_pair_index(s1, string[s1], s2, string[s2], m, l_max)])]
    if len(sites) == 3:
        s1, s2, s3 = sites
        a1, a2, a3 = string[s1], string[s2], string[s3]
        p12 = _pair_index(s1, a1, s2, a2, m, l_max)
        p23 = _pair_index(s2, a2, s3, a3, m, l_max)
        p13 = _pair_index(s1, a1, s3, a3, m, l_max)
        return [
            (1.0, [p12, a3]),
            (1.0, [p23, a1]),
            (1.0, [p13, a2]),
            (-2.0, [a1, a2, a3]),
        ]
    raise AssertionError(f"unexpected {len(sites)}-site string")


@dataclass
class MomentSystem:
    """Compiled term arrays for one (model, L) pair."""

    model: SpinModel
    l_max: int
    out_idx: np.ndarray
    coeff: np.ndarray
    drive_flag: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray

    @property
    def n_obs(self) -> int:
        return n_observables(self.l_max)

    @property
    def n_terms(self) -> int:
        return self.out_idx.shape[0]


@lru_cache(maxsize=32)
def build_moment_system(model: SpinModel, l_max: int | None = None) -> MomentSystem:
    if model.kind == KIND_HEISENBERG:
        raise ConfigError("moment closure is only derived for the tfi family")
    m = model.n_sites
    l_max = max_distance(m) if l_max is None else int(l_max)
    if l_max > max_distance(m):
        raise ConfigError(f"l_max={l_max} exceeds floor(M/2) for M={m}")
    n_obs = n_observables(l_max)
    identity_slot = n_obs

    representatives: list[dict] = [{0: a} for a in range(3)]
    for dist in range(1, l_max + 1):
        for a in range(3):
            for b in range(3):
                representatives.append({0: a, dist % m: b})

    rows: dict[tuple, float] = {}
    h_terms = _hamiltonian_strings(model)
    for o_idx, o_str in enumerate(representatives):
        for h_coeff, h_str, is_drive in h_terms:
            ph_ho, s_ho = _string_mul(h_str, o_str)
            ph_oh, _ = _string_mul(o_str, h_str)
            c = 1j * h_coeff * (ph_ho - ph_oh)
            if abs(c) < 1e-14:
                continue
            if abs(c.imag) > 1e-12:
                raise AssertionError(f"non-real derivative coefficient {c}")
            if not s_ho:
                raise AssertionError("identity cannot survive a commutator")
            for mult, factors in _moment_factors(s_ho, m, l_max):
                padded = sorted(factors) + [identity_slot] * (3 - len(factors))
                key = (o_idx, is_drive, tuple(padded))
                rows[key] = rows.get(key, 0.0) + c.real * mult

    keys = sorted(k for k, v in rows.items() if abs(v) > 1e-14)
    return MomentSystem(
        model=model,
        l_max=l_max,
        out_idx=np.array([k[0] for k in keys], dtype=np.int64),
        coeff=np.array([rows[k] for k in keys]),
        drive_flag=np.array([1 if k[1] else 0 for k in keys], dtype=np.uint8),
        f1=np.array([k[2][0] for k in keys], dtype=np.int64),
        f2=np.array([k[2][1] for k in keys], dtype=np.int64),
        f3=np.array([k[2][2] for k in keys], dtype=np.int64),
    )


def moment_rhs(system: MomentSystem, drive_value: float, v: np.ndarray) -> np.ndarray:
    """Reference evaluation of dv/dt at one drive value (numpy, no numba)."""
    vext = np.append(np.asarray(v, dtype=float), 1.0)
    c = np.where(system.drive_flag != 0, system.coeff * drive_value, system.coeff)
    contrib = c * vext[system.f1] * vext[system.f2] * vext[system.f3]
    return np.bincount(system.out_idx, weights=contrib, minlength=system.n_obs)


def integrate_closure(
    model: SpinModel,
    drive: DriveTrajectory,
    times,
    state=ProductStateSpec(),
    integrator: IntegratorConfig = IntegratorConfig(),
    l_max: int | None = None,
    band: float = TRUST_BAND,
) -> ObservableSeries:
    """Closed moment dynamics on the sample grid.

    When a moment leaves the trust band the series is truncated there, held
    at the last valid frame, and flagged via ``breakdown_time``; error
    metrics stay finite that way.
    """
    times = _check_times(times)
    system = build_moment_system(model, l_max)
    if isinstance(state, ProductStateSpec):
        v0 = product_frame(state.p, system.l_max)
    else:
        v0 = np.asarray(state, dtype=float)
        if v0.shape != (system.n_obs,):
            raise ConfigError(
                f"initial moments must have shape ({system.n_obs},), got {v0.shape}"
            )
        v0 = v0.copy()
    frames, status, t_reached, n_steps, n_rhs, n_done = integrators.integrate_moments(
        v0,
        times,
        drive.t0,
        drive.dt,
        drive.values,
        system.out_idx,
        system.coeff,
        system.drive_flag,
        system.f1,
        system.f2,
        system.f3,
        integrator.atol,
        integrator.rtol,
        integrator.max_steps,
        band,
    )
    breakdown_time = None
    if status == integrators.STATUS_BREAKDOWN:
        breakdown_time = float(t_reached)
        frames[n_done:] = frames[n_done - 1]
    elif status != integrators.STATUS_OK:
        raise IntegrationError(
            f"moment integration failed (status {status}) after {n_steps} steps",
            t_reached=t_reached,
        )
    return ObservableSeries(
        times=times, frames=frames, l_max=system.l_max, breakdown_time=breakdown_time
    )

"""Exact unitary dynamics of driven rings, sampled on a time grid.

The workhorse is evolve(): compile the model to flip/phase arrays, run the
adaptive RK kernel with forced landings on the sample grid, then reduce
every stored state to the site-averaged observable frame (optionally with
the half-chain entanglement entropy).  States never leave this module
except through evolve_states(), which exists for norm/energy checks and
debugging.
"""
from __future__ import annotations

import numpy as np

from . import integrators
from .drives import DriveTrajectory
from .errors import ConfigError, IntegrationError
from .models import (
    CompiledHamiltonian,
    IntegratorConfig,
    ProductStateSpec,
    SpinModel,
    compile_hamiltonian,
)
from .observables import ObservableSeries, max_distance
from .pauli import measurement_plan
from .validation import check_state_dim

_STATUS_WORDS = {
    integrators.STATUS_UNDERFLOW: "step size underflow",
    integrators.STATUS_MAX_STEPS: "step budget exhausted",
}


def product_state(m: int, amplitudes: np.ndarray) -> np.ndarray:
    """State with per-site amplitudes (m, 2); site 0 is the lowest bit."""
    amplitudes = np.asarray(amplitudes, dtype=np.complex128)
    if amplitudes.shape != (m, 2):
        raise ConfigError(f"expected per-site amplitudes of shape ({m}, 2)")
    psi = np.ones(1, dtype=np.complex128)
    for j in range(m):
        psi = np.kron(amplitudes[j], psi)
    norm = np.linalg.norm(psi)
    if norm < 1e-12:
        raise ConfigError("product state has zero norm")
    return psi / norm


def build_initial_state(m: int, spec: ProductStateSpec) -> np.ndarray:
    single = np.array([np.sqrt(spec.p), np.sqrt(1.0 - spec.p)])
    return product_state(m, np.tile(single, (m, 1)))


def half_chain_entropy(psi: np.ndarray, m: int) -> float:
    """Von Neumann entropy (natural log) of the first floor(M/2) sites."""
    k = m // 2
    if k == 0:
        return 0.0
    block = psi.reshape(1 << (m - k), 1 << k)
    sv = np.linalg.svd(block, compute_uv=False)
    p = sv * sv
    p = p[p > 1e-12]
    return float(-np.sum(p * np.log(p)))


def _resolve_state(model: SpinModel, state) -> np.ndarray:
    if isinstance(state, ProductStateSpec):
        return build_initial_state(model.n_sites, state)
    psi = np.asarray(state, dtype=np.complex128)
    check_state_dim(psi, model.n_sites)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-6:
        raise ConfigError(f"initial state norm {norm:.8f} is not 1")
    return psi.copy()


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or times.shape[0] < 2:
        raise ConfigError("need at least 2 sample times")
    if np.any(np.diff(times) <= 0):
        raise ConfigError("sample times must be strictly increasing")
    return times


def evolve_states(
    model: SpinModel,
    drive: DriveTrajectory,
    times,
    state=ProductStateSpec(),
    integrator: IntegratorConfig = IntegratorConfig(),
) -> np.ndarray:
    """States at every sample time, shape (n_times, 2^M)."""
    times = _check_times(times)
    psi0 = _resolve_state(model, state)
    ham = compile_hamiltonian(model)
    states, status, t_reached, n_steps, n_rhs, n_done = integrators.integrate_schrodinger(
        psi0,
        times,
        drive.t0,
        drive.dt,
        drive.values,
        ham.drive_diag,
        ham.drive_flips,
        ham.drive_phases,
        ham.static_diag,
        ham.static_flips,
        ham.static_phases,
        integrator.atol,
        integrator.rtol,
        integrator.max_steps,
    )
    if status != integrators.STATUS_OK:
        raise IntegrationError(
            f"{_STATUS_WORDS.get(status, f'status {status}')} at t={t_reached:.6f} "
            f"after {n_steps} steps",
            t_reached=t_reached,
        )
    return states

def evolve(
    model: SpinModel,
    drive: DriveTrajectory,
    times,
    state=ProductStateSpec(),
    integrator: IntegratorConfig = IntegratorConfig(),
    l_max: int | None = None,
    entropy: bool = False,
) -> ObservableSeries:
    times = _check_times(times)
    states = evolve_states(model, drive, times, state=state, integrator=integrator)
    l_max = max_distance(model.n_sites) if l_max is None else l_max
    plan = measurement_plan(model.n_sites, l_max)
    frames = np.stack([plan.measure(states[i]) for i in range(states.shape[0])])
    ent = None
    if entropy:
        ent = np.array(
            [half_chain_entropy(states[i], model.n_sites) for i in range(states.shape[0])]
        )
    return ObservableSeries(times=times, frames=frames, l_max=l_max, entropy=ent)


def measure(psi: np.ndarray, m: int, l_max: int | None = None) -> np.ndarray:
    """Site-averaged observable frame of a single state."""
    check_state_dim(psi, m)
    return measurement_plan(m, max_distance(m) if l_max is None else l_max).measure(psi)

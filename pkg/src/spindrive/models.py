"""Model definitions and compilation to flip/phase arrays.

Every Hamiltonian used here splits into a driven part and a static part,

    H(t) = d(t) * H_drive + H_static,

and both parts are sums of Pauli strings, so each is representable as one
diagonal vector plus a list of (flip mask, real phase vector) pairs.  The
integrator kernels consume exactly that representation; nothing downstream
ever sees a dense matrix.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError
from .pauli import AXIS_X, AXIS_Y, AXIS_Z, string_action
from .validation import check_positive, check_probability, check_sites

KIND_TFI = "tfi"
KIND_TFI_LONGITUDINAL = "tfi_longitudinal"
KIND_HEISENBERG = "heisenberg"
MODEL_KINDS = (KIND_TFI, KIND_TFI_LONGITUDINAL, KIND_HEISENBERG)


@dataclass(frozen=True)
class SpinModel:
    """A driven ring of M spin-1/2 sites.

    kind "tfi":  H = d(t) sum_j s^x_j + J sum_j s^z_j s^z_{j+1}
    kind "tfi_longitudinal":  adds g sum_j s^z_j to the static part
    kind "heisenberg":  H = d(t) sum_j s^x_j s^x_{j+1}
                            + sum_j (jy s^y_j s^y_{j+1} + jz s^z_j s^z_{j+1})

    Bonds wrap periodically; for M=2 both wrap-around bonds are kept, so the
    pair (0, 1) is coupled twice.  M=1 has no bonds at all.
    """

    kind: str
    n_sites: int
    coupling: float = 1.0
    g: float = 0.0
    jy: float = 1.0
    jz: float = 1.0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}, expected one of {MODEL_KINDS}")
        check_sites(self.n_sites)
        if self.kind == KIND_HEISENBERG and self.n_sites < 2:
            raise ConfigError("heisenberg model needs at least 2 sites")
        if self.kind != KIND_TFI_LONGITUDINAL and self.g != 0.0:
            raise ConfigError(f"g is only meaningful for kind {KIND_TFI_LONGITUDINAL!r}")

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def bonds(self) -> list[tuple[int, int]]:
        if self.n_sites == 1:
            return []
        return [(j, (j + 1) % self.n_sites) for j in range(self.n_sites)]


@dataclass(frozen=True)
class ProductStateSpec:
    """Translation-invariant product state (sqrt(p)|0> + sqrt(1-p)|1>)^M.

    p = 1 is all spins up; p = 1/2 points every spin along +x.
    """

    p: float = 1.0

    def __post_init__(self):
        check_probability(self.p)


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and limits for the adaptive embedded RK pair."""

    atol: float = 1e-9
    rtol: float = 1e-9
    max_steps: int = 10_000_000

    def __post_init__(self):
        check_positive(self.atol, "atol")
        check_positive(self.rtol, "rtol")
        check_positive(self.max_steps, "max_steps")


#: tolerances used for timing comparisons, loose enough that per-step cost
#: (not error control) dominates
BENCH_INTEGRATOR = IntegratorConfig(atol=1e-5, rtol=1e-3)


@dataclass
class CompiledHamiltonian:
    """Flip/phase arrays for H(t) = d(t) * H_drive + H_static.

    All phase vectors are real for the model kinds above; the integrator
    kernel relies on that.
    """

    n_sites: int
    drive_diag: np.ndarray    # (dim,)
    drive_flips: np.ndarray   # (nd,) int64
    drive_phases: np.ndarray  # (nd, dim)
    static_diag: np.ndarray   # (dim,)
    static_flips: np.ndarray  # (ns,) int64
    static_phases: np.ndarray # (ns, dim)

    @property
    def dim(self) -> int:
        return 1 << self.n_sites


def _accumulate(m: int, terms: list[tuple[float, tuple[tuple[int, int], ...]]]):
    """Collapse weighted Pauli strings into (diag, flips, phases) arrays."""
    dim = 1 << m
    diag = np.zeros(dim)
    offdiag: dict[int, np.ndarray] = {}
    for weight, items in terms:
        mask, phase = string_action(m, items)
        if np.max(np.abs(phase.imag)) > 0:
            raise ConfigError("model compilation assumes real string phases")
        if mask == 0:
            diag += weight * phase.real
        else:
            acc = offdiag.setdefault(mask, np.zeros(dim))
            acc += weight * phase.real
    flips = np.array(sorted(offdiag), dtype=np.int64)
    phases = (
        np.array([offdiag[f] for f in flips])
        if len(flips)
        else np.zeros((0, dim))
    )
    return diag, flips, phases


@lru_cache(maxsize=32)
def compile_hamiltonian(model: SpinModel) -> CompiledHamiltonian:
    """Compiled arrays are cached per model; callers must not mutate them."""
    m = model.n_sites
    drive_terms: list[tuple[float, tuple[tuple[int, int], ...]]] = []
    static_terms: list[tuple[float, tuple[tuple[int, int], ...]]] = []
    if model.kind in (KIND_TFI, KIND_TFI_LONGITUDINAL):
        for j in range(m):
            drive_terms.append((1.0, ((j, AXIS_X),)))
        for i, j in model.bonds():
            static_terms.append((model.coupling, ((i, AXIS_Z), (j, AXIS_Z))))
        if model.kind == KIND_TFI_LONGITUDINAL:
            for j in range(m):
                static_terms.append((model.g, ((j, AXIS_Z),)))
    else:
        for i, j in model.bonds():
            drive_terms.append((model.coupling, ((i, AXIS_X), (j, AXIS_X))))
            static_terms.append((model.jy, ((i, AXIS_Y), (j, AXIS_Y))))
            static_terms.append((model.jz, ((i, AXIS_Z), (j, AXIS_Z))))
    ddiag, dflips, dphases = _accumulate(m, drive_terms)
    sdiag, sflips, sphases = _accumulate(m, static_terms)
    return CompiledHamiltonian(
        n_sites=m,
        drive_diag=ddiag,
        drive_flips=dflips,
        drive_phases=dphases,
        static_diag=sdiag,
        static_flips=sflips,
        static_phases=sphases,
    )


def apply_hamiltonian(
    ham: CompiledHamiltonian, drive_value: float, psi: np.ndarray
) -> np.ndarray:
    """Reference (pure numpy) H(t) psi, used by tests and energy evaluation."""
    ix = np.arange(ham.dim, dtype=np.int64)
    out = (drive_value * ham.drive_diag + ham.static_diag) * psi
    for k in range(len(ham.drive_flips)):
        out += drive_value * ham.drive_phases[k] * psi[ix ^ ham.drive_flips[k]]
    for k in range(len(ham.static_flips)):
        out += ham.static_phases[k] * psi[ix ^ ham.static_flips[k]]
    return out


def energy_expectation(
    ham: CompiledHamiltonian, drive_value: float, psi: np.ndarray
) -> float:
    return float(np.vdot(psi, apply_hamiltonian(ham, drive_value, psi)).real)

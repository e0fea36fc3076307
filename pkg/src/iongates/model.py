"""Hamiltonians, jump operators and initial states of the ion-oscillator model.

All frequencies are angular (rad/s) and all rates are in 1/s.  Everything is
written in the frame rotating with the probe, where ``|f>`` sits at the probe
detuning and one phonon costs ``delta_probe + delta_mode``; a resonant
red-sideband drive (``delta_mode = 0``) therefore keeps ``|f,n>`` and
``|1,n+1>`` degenerate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .operators import (
    HilbertSpace,
    Level,
    basis_index,
    ion_op,
    ladder_down,
    ladder_up,
    number_op,
)

TWO_PI = 2.0 * math.pi

# Experimental values of the demonstration (Hz for frequencies, 1/s for rates).
PAPER_OMEGA_SB_HZ = 8.0e3
PAPER_OMEGA_F_HZ = 1.15e3
PAPER_NBAR = 0.14
PAPER_HEATING_RATE = 106.0
PAPER_GAMMA_F = 4.5e3
DEFAULT_GAMMA_E = 1.0e5


@dataclass(frozen=True)
class SystemParams:
    omega_f: float = TWO_PI * PAPER_OMEGA_F_HZ
    omega_sb: float = TWO_PI * PAPER_OMEGA_SB_HZ
    delta_probe: float = 0.0
    delta_mode: float = 0.0
    gamma_f: float = PAPER_GAMMA_F
    gamma_e: float = DEFAULT_GAMMA_E
    nbar: float = PAPER_NBAR
    heating_rate: float = PAPER_HEATING_RATE
    fock_cutoff: int = 5

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not np.isfinite(value):
                raise ValueError(f"{f.name} must be finite, got {value}")
        for name in ("omega_f", "omega_sb", "gamma_f", "gamma_e", "nbar", "heating_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        # Detunings are signed; the mode term only needs to be well defined.
        HilbertSpace(self.fock_cutoff)

    @classmethod
    def from_hz(
        cls,
        omega_f_hz: float = PAPER_OMEGA_F_HZ,
        omega_sb_hz: float = PAPER_OMEGA_SB_HZ,
        delta_probe_hz: float = 0.0,
        delta_mode_hz: float = 0.0,
        **rates,
    ) -> "SystemParams":
        """Build from Omega/(2 pi) values in Hz; rates stay in 1/s."""
        return cls(
            omega_f=TWO_PI * omega_f_hz,
            omega_sb=TWO_PI * omega_sb_hz,
            delta_probe=TWO_PI * delta_probe_hz,
            delta_mode=TWO_PI * delta_mode_hz,
            **rates,
        )

    @property
    def space(self) -> HilbertSpace:
        return HilbertSpace(self.fock_cutoff)

    @property
    def mode_frequency(self) -> float:
        """Energy of one phonon in the probe frame."""
        return self.delta_probe + self.delta_mode

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class DensityState:
    space: HilbertSpace
    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"rho has shape {rho.shape}, expected {(self.space.dim,) * 2}")
        object.__setattr__(self, "rho", rho)

    @classmethod
    def pure(cls, space: HilbertSpace, psi: np.ndarray) -> "DensityState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(space, np.outer(psi, psi.conj()))

    def check(self, herm_tol: float = 1e-10, trace_tol: float = 1e-10, eig_tol: float = 1e-8):
        """Raise ``ValueError`` unless rho is a valid density matrix."""
        herm = np.max(np.abs(self.rho - self.rho.conj().T))
        if herm > herm_tol:
            raise ValueError(f"density matrix not Hermitian (max deviation {herm:.3g})")
        tr = np.trace(self.rho)
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"density matrix trace {tr.real:.12g} differs from 1")
        lowest = np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))[0]
        if lowest < -eig_tol:
            raise ValueError(f"density matrix has negative eigenvalue {lowest:.3g}")
        return self


def probe_hamiltonian(params: SystemParams) -> np.ndarray:
    """Carrier drive on ion 1, coupling |0> and |f> with Rabi frequency omega_f."""
    s = params.space
    return 0.5 * params.omega_f * (ion_op(s, 1, Level.F, Level.ZERO) + ion_op(s, 1, Level.ZERO, Level.F))


def sideband_hamiltonian(params: SystemParams, ion: int) -> np.ndarray:
    """Red-sideband coupling |f,n> <-> |1,n+1> on one ion plus its |f> detuning."""
    s = params.space
    a, ad = ladder_down(s), ladder_up(s)
    coupling = a @ ion_op(s, ion, Level.F, Level.ONE) + ad @ ion_op(s, ion, Level.ONE, Level.F)
    return 0.5 * params.omega_sb * coupling + params.delta_probe * ion_op(s, ion, Level.F, Level.F)


def mode_hamiltonian(params: SystemParams) -> np.ndarray:
    return params.mode_frequency * number_op(params.space)


def total_hamiltonian(params: SystemParams, probe_on: bool, sideband_on: bool) -> np.ndarray:
    """Coherent part of the master equation for the enabled drives.

    With no drive at all the frame is irrelevant and the zero matrix is
    returned; otherwise the |f> detuning and the phonon energy are always
    present so the frame stays the same across pulse segments.
    """
    s = params.space
    H = np.zeros((s.dim, s.dim), dtype=complex)
    if not (probe_on or sideband_on):
        return H
    if sideband_on:
        H += sideband_hamiltonian(params, 1) + sideband_hamiltonian(params, 2)
    else:
        H += params.delta_probe * (ion_op(s, 1, Level.F, Level.F) + ion_op(s, 2, Level.F, Level.F))
    if probe_on:
        H += probe_hamiltonian(params)
    return H + mode_hamiltonian(params)


def cooling_jump(params: SystemParams) -> np.ndarray:
    return math.sqrt(params.gamma_f) * ladder_down(params.space)


def pump_jumps(params: SystemParams, ions=(1,)) -> list[np.ndarray]:
    """Optical pumping |e> -> |0> on each requested ion."""
    s = params.space
    return [math.sqrt(params.gamma_e) * ion_op(s, j, Level.ZERO, Level.E) for j in sorted(set(ions))]


def heating_jumps(params: SystemParams) -> list[np.ndarray]:
    # Infinite-temperature bath: equal up and down rates give d<n>/dt = heating_rate.
    s = params.space
    root = math.sqrt(params.heating_rate)
    return [root * ladder_up(s), root * ladder_down(s)]


def thermal_populations(nbar: float, fock_cutoff: int) -> np.ndarray:
    """Geometric phonon distribution, renormalized after truncation."""
    if nbar < 0:
        raise ValueError(f"nbar must be >= 0, got {nbar}")
    n = np.arange(fock_cutoff + 1)
    if nbar == 0:
        p = (n == 0).astype(float)
    else:
        p = (nbar / (1.0 + nbar)) ** n / (1.0 + nbar)
    return p / p.sum()


def thermal_initial_state(params: SystemParams, ion1, ion2) -> DensityState:
    s = params.space
    rho = np.zeros((s.dim, s.dim), dtype=complex)
    for n, p in enumerate(thermal_populations(params.nbar, s.fock_cutoff)):
        i = basis_index(s, ion1, ion2, n)
        rho[i, i] = p
    return DensityState(s, rho)


def fock_initial_state(params: SystemParams, ion1, ion2, n: int = 0) -> DensityState:
    s = params.space
    rho = np.zeros((s.dim, s.dim), dtype=complex)
    i = basis_index(s, ion1, ion2, n)
    rho[i, i] = 1.0
    return DensityState(s, rho)

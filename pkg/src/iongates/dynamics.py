"""Lindblad integration over piecewise-constant pulse segments."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from .model import (
    DensityState,
    SystemParams,
    cooling_jump,
    heating_jumps,
    pump_jumps,
    thermal_initial_state,
    total_hamiltonian,
)
from .operators import N_LEVELS, HilbertSpace, Level, embed_electronic

PAIR_KEYS = [(Level(k), Level(l)) for k in range(N_LEVELS) for l in range(N_LEVELS)]


class IntegrationError(RuntimeError):
    def __init__(self, message: str, time: float):
        super().__init__(f"integration failed at t = {time:.6g} s: {message}")
        self.time = time


@dataclass(frozen=True)
class PulseSegment:
    duration: float
    probe_on: bool = False
    sideband_on: bool = False
    cooling_on: bool = False
    pump_ions: frozenset = frozenset()
    # Instantaneous unitaries applied (in order) before the segment starts;
    # 16x16 electronic operators are extended by the phonon identity.
    extra_unitaries: tuple = ()
    label: str = ""

    def __post_init__(self):
        if not self.duration >= 0:
            raise ValueError(f"segment duration must be >= 0, got {self.duration}")
        object.__setattr__(self, "pump_ions", frozenset(self.pump_ions))
        object.__setattr__(self, "extra_unitaries", tuple(np.asarray(u, dtype=complex) for u in self.extra_unitaries))


@dataclass(frozen=True)
class PulseSequence:
    segments: tuple

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValueError("a pulse sequence needs at least one segment")

    def __iter__(self):
        return iter(self.segments)

    def __len__(self):
        return len(self.segments)

    def __getitem__(self, i):
        return self.segments[i]

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.segments)


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float | None = None  # None: 1/(50 * fastest active rate) per segment
    method: str = "DOP853"
    samples: int = 200
    check_state: bool = True

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("integrator tolerances must be > 0")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError("max_step must be > 0")
        if self.method not in ("RK45", "DOP853", "RK23"):
            raise ValueError(f"unsupported integrator method {self.method!r}")
        if self.samples < 2:
            raise ValueError("samples must be >= 2")


@dataclass
class Trajectory:
    """Sampled observables; ``populations[i]`` is the exact 4x4 electronic table."""

    times: np.ndarray
    populations: np.ndarray
    mean_n: np.ndarray
    ground_frac: np.ndarray
    trace_dev: np.ndarray = field(default_factory=lambda: np.zeros(0))
    herm_dev: np.ndarray = field(default_factory=lambda: np.zeros(0))
    min_eig: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ground_populations: np.ndarray = field(default_factory=lambda: np.zeros((0, N_LEVELS, N_LEVELS)))

    def __len__(self):
        return len(self.times)

    def merged_populations(self) -> np.ndarray:
        return np.array([merge_readout(p) for p in self.populations])

    def population(self, k, l, merge: bool = False) -> np.ndarray:
        pops = self.merged_populations() if merge else self.populations
        return pops[:, Level.parse(k), Level.parse(l)]

    def shifted(self, offset: float) -> "Trajectory":
        return Trajectory(self.times + offset, self.populations, self.mean_n, self.ground_frac,
                          self.trace_dev, self.herm_dev, self.min_eig, self.ground_populations)

    @classmethod
    def concatenate(cls, parts: Sequence["Trajectory"]) -> "Trajectory":
        cat = lambda name: np.concatenate([getattr(p, name) for p in parts])
        return cls(cat("times"), cat("populations"), cat("mean_n"), cat("ground_frac"),
                   cat("trace_dev"), cat("herm_dev"), cat("min_eig"), cat("ground_populations"))

    def to_csv(self, path, merge: bool = True) -> None:
        pops = self.merged_populations() if merge else self.populations
        header = ["time_s"] + [f"P_{k.symbol}{l.symbol}" for k, l in PAIR_KEYS] + ["mean_n", "ground_frac"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i, t in enumerate(self.times):
                row = [t] + [pops[i, k, l] for k, l in PAIR_KEYS] + [self.mean_n[i], self.ground_frac[i]]
                writer.writerow([f"{x:.12g}" for x in row])


def lindblad_rhs(H: np.ndarray, jumps: Iterable[np.ndarray], rho: np.ndarray) -> np.ndarray:
    """Time derivative of rho under the Lindblad master equation."""
    H = np.asarray(H)
    rho = np.asarray(rho)
    if H.shape != rho.shape or H.shape[0] != H.shape[1]:
        raise ValueError(f"dimension mismatch: H {H.shape}, rho {rho.shape}")
    drho = -1j * (H @ rho - rho @ H)
    for L in jumps:
        if L.shape != H.shape:
            raise ValueError(f"dimension mismatch: jump {L.shape}, H {H.shape}")
        Ld = L.conj().T
        LdL = Ld @ L
        drho += L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)
    return drho


def _rhs_function(H: np.ndarray, jumps: list[np.ndarray]) -> Callable:
    # Non-Hermitian effective Hamiltonian folds the anticommutator into one
    # product; the generator has a few hundred nonzeros, so products run sparse.
    dim = H.shape[0]
    H_eff = H - 0.5j * sum((L.conj().T @ L for L in jumps), np.zeros_like(H))
    H_eff = sparse.csr_array(H_eff)
    ops = [sparse.csr_array(L) for L in jumps if np.any(L)]

    def rhs(t, y):
        rho = y.reshape(dim, dim)
        drho = -1j * (H_eff @ rho - (H_eff @ rho.conj().T).conj().T)
        for L in ops:
            drho += (L @ (L @ rho).conj().T).conj().T
        return drho.ravel()

    return rhs


def segment_generator(params: SystemParams, segment: PulseSegment) -> tuple[np.ndarray, list[np.ndarray]]:
    """Hamiltonian and jump operators active during ``segment``."""
    H = total_hamiltonian(params, segment.probe_on, segment.sideband_on)
    jumps = []
    if params.heating_rate > 0:
        jumps += heating_jumps(params)
    if segment.cooling_on and params.gamma_f > 0:
        jumps.append(cooling_jump(params))
    if segment.pump_ions and params.gamma_e > 0:
        jumps += pump_jumps(params, segment.pump_ions)
    return H, jumps


def default_max_step(params: SystemParams, segment: PulseSegment) -> float:
    """One fiftieth of the inverse of the fastest rate active in ``segment``.

    Angular frequencies count as cycles per second (omega / 2 pi), decay and
    heating rates in 1/s.
    """
    rates = [params.heating_rate]
    if segment.probe_on:
        rates += [params.omega_f / (2 * math.pi), abs(params.delta_probe) / (2 * math.pi)]
    if segment.sideband_on:
        rates += [params.omega_sb / (2 * math.pi), abs(params.mode_frequency) / (2 * math.pi)]
    if segment.cooling_on:
        rates.append(params.gamma_f)
    if segment.pump_ions:
        rates.append(params.gamma_e)
    rate = max(rates)
    return np.inf if rate == 0 else 1.0 / (50.0 * rate)


def electronic_populations(space: HilbertSpace, rho: np.ndarray) -> np.ndarray:
    diag = np.real(np.diag(rho)).reshape(N_LEVELS, N_LEVELS, space.n_fock)
    return diag.sum(axis=2)


def phonon_distribution(space: HilbertSpace, rho: np.ndarray) -> np.ndarray:
    diag = np.real(np.diag(rho)).reshape(N_LEVELS * N_LEVELS, space.n_fock)
    return diag.sum(axis=0)


def merge_readout(pops: np.ndarray) -> np.ndarray:
    """Fold |f> into |1> on both ions, as the fluorescence readout does."""
    out = np.array(pops, dtype=float, copy=True)
    out[Level.ONE, :] += out[Level.F, :]
    out[Level.F, :] = 0.0
    out[:, Level.ONE] += out[:, Level.F]
    out[:, Level.F] = 0.0
    return out


def populations(state: DensityState, readout_merge_1f: bool = False) -> dict:
    """Electronic populations P_kl keyed by level pairs."""
    pops = electronic_populations(state.space, state.rho)
    if readout_merge_1f:
        pops = merge_readout(pops)
    return {(k, l): float(pops[k, l]) for k, l in PAIR_KEYS}


def ground_state_fraction(state: DensityState) -> float:
    return float(phonon_distribution(state.space, state.rho)[0])


def mean_phonon(state: DensityState) -> float:
    p = phonon_distribution(state.space, state.rho)
    return float(np.dot(np.arange(len(p)), p))


def _observe(space: HilbertSpace, times, rhos, check: bool) -> Trajectory:
    n = np.arange(space.n_fock)
    pops, pops0, mean_n, ground, tr, herm, eig = [], [], [], [], [], [], []
    for rho in rhos:
        pops.append(electronic_populations(space, rho))
        pops0.append(np.real(np.diag(rho)).reshape(N_LEVELS, N_LEVELS, space.n_fock)[:, :, 0])
        ph = phonon_distribution(space, rho)
        mean_n.append(float(ph @ n))
        ground.append(float(ph[0]))
        if check:
            tr.append(abs(np.trace(rho) - 1.0))
            herm.append(np.max(np.abs(rho - rho.conj().T)))
            eig.append(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    arr = lambda x: np.asarray(x, dtype=float)
    return Trajectory(arr(times), np.asarray(pops), arr(mean_n), arr(ground), arr(tr), arr(herm), arr(eig),
                      np.asarray(pops0))


def evolve_matrix(rho0: np.ndarray, H: np.ndarray, jumps: list[np.ndarray], duration: float,
                  cfg: IntegratorConfig, t_eval=None, max_step: float = np.inf) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integrate one time-independent generator; returns (times, samples, final rho)."""
    dim = rho0.shape[0]
    if t_eval is None:
        t_eval = np.linspace(0.0, duration, cfg.samples)
    t_eval = np.asarray(t_eval, dtype=float)
    if duration == 0 or not (np.any(H) or jumps):
        return t_eval, np.repeat(rho0[None], len(t_eval), axis=0), rho0.copy()
    if cfg.max_step is not None:
        max_step = cfg.max_step
    sol = solve_ivp(
        _rhs_function(H, jumps),
        (0.0, duration),
        rho0.astype(complex).ravel(),
        method=cfg.method,
        t_eval=t_eval,
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_step=max_step,
        dense_output=False,
    )
    if sol.status != 0:
        raise IntegrationError(sol.message, float(sol.t[-1]) if len(sol.t) else 0.0)
    samples = sol.y.T.reshape(-1, dim, dim)
    if t_eval[-1] == duration:
        final = samples[-1]
    else:
        final = evolve_matrix(rho0, H, jumps, duration, cfg, [duration], max_step)[2]
    return sol.t, samples, final


def evolve(state: DensityState, segment: PulseSegment, params: SystemParams,
           cfg: IntegratorConfig = IntegratorConfig(), t_eval=None) -> tuple[DensityState, Trajectory]:
    """Integrate one segment (without its extra unitaries) from ``state``."""
    if state.space != params.space:
        raise ValueError(f"state space {state.space} does not match params cutoff {params.fock_cutoff}")
    H, jumps = segment_generator(params, segment)
    times, samples, final = evolve_matrix(state.rho, H, jumps, segment.duration, cfg, t_eval,
                                          default_max_step(params, segment))
    # Integration noise only; the generator itself is Hermiticity preserving.
    final = 0.5 * (final + final.conj().T)
    return DensityState(state.space, final), _observe(state.space, times, samples, cfg.check_state)


def apply_unitary(state: DensityState, U: np.ndarray) -> DensityState:
    U = np.asarray(U, dtype=complex)
    if U.shape != (state.space.dim,) * 2:
        U = embed_electronic(state.space, U)
    return DensityState(state.space, U @ state.rho @ U.conj().T)


def run_sequence(initial: DensityState, seq: PulseSequence, params: SystemParams,
                 cfg: IntegratorConfig = IntegratorConfig()) -> tuple[DensityState, Trajectory]:
    state = initial
    parts = []
    offset = 0.0
    for segment in seq:
        for U in segment.extra_unitaries:
            state = apply_unitary(state, U)
        state, traj = evolve(state, segment, params, cfg)
        parts.append(traj.shifted(offset))
        offset += segment.duration
    return state, Trajectory.concatenate(parts)


@dataclass
class ConvergenceReport:
    cutoffs: list
    populations: list
    differences: list
    tol: float = 1e-4

    @property
    def passed(self) -> bool:
        return bool(self.differences) and self.differences[-1] < self.tol

    def to_dict(self) -> dict:
        return {
            "cutoffs": list(self.cutoffs),
            "max_population_differences": list(self.differences),
            "tol": self.tol,
            "passed": self.passed,
        }


def convergence_check(initial, seq: PulseSequence, params: SystemParams, cfg: IntegratorConfig = IntegratorConfig(),
                      cutoffs=(4, 5, 6), tol: float = 1e-4, merge: bool = False) -> ConvergenceReport:
    """Run ``seq`` at several Fock cutoffs and compare final electronic populations.

    ``initial`` is either an (ion1, ion2) level pair, started in the thermal
    phonon state, or a callable mapping params to a DensityState.
    """
    pops = []
    for cutoff in cutoffs:
        p = params.replace(fock_cutoff=int(cutoff))
        if callable(initial):
            rho0 = initial(p)
        else:
            rho0 = thermal_initial_state(p, *initial)
        final, _ = run_sequence(rho0, seq, p, cfg)
        table = electronic_populations(final.space, final.rho)
        pops.append(merge_readout(table) if merge else table)
    diffs = [float(np.max(np.abs(b - a))) for a, b in zip(pops, pops[1:])]
    return ConvergenceReport(list(cutoffs), pops, diffs, tol)

"""Dressed-state analysis of the probe-excited subspaces."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .model import SystemParams, probe_hamiltonian, total_hamiltonian
from .operators import Level, basis_index, basis_label, format_label

DEGENERACY_TOL = 1e-9


def gate_detuning(kind: str, omega_sb: float) -> float:
    """Probe detuning that puts the wanted dressed state on resonance."""
    kind = kind.upper()
    if kind == "OR":
        return omega_sb / math.sqrt(2.0)
    if kind == "NOR":
        return omega_sb / 2.0
    raise ValueError(f"unknown gate kind {kind!r}")


@dataclass(frozen=True)
class Subspace:
    """Probe-excited states reachable from ``initial`` and their sideband dressing.

    ``hamiltonian`` is the sideband Hamiltonian restricted to ``labels``;
    ``ground_labels``/``ground_hamiltonian`` describe the sideband dressing
    of the initial state itself; ``probe_matrix[i, j]`` couples ground
    member ``j`` to excited member ``i``.
    """

    initial: tuple
    labels: tuple
    hamiltonian: np.ndarray
    probe_vector: np.ndarray
    ground_labels: tuple
    ground_hamiltonian: np.ndarray
    probe_matrix: np.ndarray

    def __len__(self):
        return len(self.labels)


@dataclass(frozen=True)
class DressedState:
    energy: float
    vector: np.ndarray
    probe_overlap: float
    labels: tuple

    def describe(self, cutoff: float = 1e-9) -> str:
        terms = []
        for c, lab in zip(self.vector, self.labels):
            if abs(c) > cutoff:
                terms.append(f"{c.real:+.4f}{format_label(lab)}" if abs(c.imag) < cutoff else f"({c:.4f}){format_label(lab)}")
        return " ".join(terms)


@dataclass(frozen=True)
class Resonance:
    ground: DressedState
    excited: DressedState
    delta_d: float
    omega_d: float


def _closure(seeds, coupling: np.ndarray) -> list[int]:
    seen = set(seeds)
    queue = deque(seeds)
    while queue:
        i = queue.popleft()
        for j in np.flatnonzero(np.abs(coupling[:, i]) > 0):
            if j not in seen:
                seen.add(int(j))
                queue.append(int(j))
    return sorted(seen)


def excited_subspace(initial, params: SystemParams) -> Subspace:
    """Collect the states the probe reaches from ``initial`` (k, l, n).

    Connectivity is taken from unit-strength couplings so the subspace does
    not collapse when a Rabi frequency is set to zero.
    """
    space = params.space
    k, l, n = initial
    start = basis_index(space, k, l, n)
    unit = params.replace(omega_sb=1.0, omega_f=1.0, delta_probe=0.0, delta_mode=0.0)
    sb_struct = total_hamiltonian(unit, probe_on=False, sideband_on=True)
    probe_struct = probe_hamiltonian(unit)

    ground = _closure([start], sb_struct)
    seeds = sorted({int(j) for i in ground for j in np.flatnonzero(np.abs(probe_struct[:, i]) > 0)})
    excited = _closure(seeds, sb_struct) if seeds else []

    H = total_hamiltonian(params, probe_on=False, sideband_on=True)
    V = probe_hamiltonian(params)
    labels = tuple(basis_label(space, i) for i in excited)
    ground_labels = tuple(basis_label(space, i) for i in ground)
    return Subspace(
        initial=(Level.parse(k), Level.parse(l), int(n)),
        labels=labels,
        hamiltonian=H[np.ix_(excited, excited)],
        probe_vector=V[excited, start] if excited else np.zeros(0, dtype=complex),
        ground_labels=ground_labels,
        ground_hamiltonian=H[np.ix_(ground, ground)],
        probe_matrix=V[np.ix_(excited, ground)] if excited else np.zeros((0, len(ground)), dtype=complex),
    )


def _fix_phase(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v) - 1e-12 * np.arange(len(v))))
    return v * (abs(v[i]) / v[i])


def _swap_matrix(labels) -> np.ndarray | None:
    index = {lab: i for i, lab in enumerate(labels)}
    P = np.zeros((len(labels), len(labels)))
    for i, (k, l, n) in enumerate(labels):
        j = index.get((l, k, n))
        if j is None:
            return None
        P[j, i] = 1.0
    return P


def dressed_basis(H: np.ndarray, labels) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvector columns with a reproducible basis.

    Degenerate eigenspaces are split by ion-exchange parity whenever the
    label set is closed under exchanging the ions; every vector has its
    largest component made real and positive.
    """
    H = 0.5 * (H + H.conj().T)
    if H.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=complex)
    evals, evecs = np.linalg.eigh(H)
    evecs = evecs.astype(complex)
    swap = _swap_matrix(labels)
    scale = max(1.0, float(np.max(np.abs(evals))))
    start = 0
    while start < len(evals):
        stop = start + 1
        while stop < len(evals) and evals[stop] - evals[start] < DEGENERACY_TOL * scale:
            stop += 1
        if stop - start > 1 and swap is not None:
            block = evecs[:, start:stop]
            parity = block.conj().T @ swap @ block
            pvals, pvecs = np.linalg.eigh(0.5 * (parity + parity.conj().T))
            evecs[:, start:stop] = block @ pvecs
        start = stop
    for j in range(evecs.shape[1]):
        evecs[:, j] = _fix_phase(evecs[:, j])
    return evals, evecs


def dressed_spectrum(sub: Subspace) -> list[DressedState]:
    if len(sub) == 0:
        raise ValueError(f"initial state {format_label(sub.initial)} couples to no excited state")
    evals, evecs = dressed_basis(sub.hamiltonian, sub.labels)
    return [
        DressedState(float(e), evecs[:, j], float(abs(np.vdot(evecs[:, j], sub.probe_vector))), sub.labels)
        for j, e in enumerate(evals)
    ]


def ground_spectrum(sub: Subspace) -> list[DressedState]:
    evals, evecs = dressed_basis(sub.ground_hamiltonian, sub.ground_labels)
    return [DressedState(float(e), evecs[:, j], 0.0, sub.ground_labels) for j, e in enumerate(evals)]


def resonance_offsets(initial, params: SystemParams, gate: str | None = None) -> list[Resonance]:
    """Detuning and effective Rabi frequency of every dressed transition.

    ``delta_d`` is the excited dressed energy minus the dressed initial
    energy in the probe frame, so a transition is resonant at zero;
    ``omega_d`` is twice the probe matrix element between the two dressed
    states, i.e. the Rabi frequency of that effective two-level system.
    ``gate`` ("OR"/"NOR") overrides the probe detuning.
    """
    if gate is not None:
        params = params.replace(delta_probe=gate_detuning(gate, params.omega_sb))
    sub = excited_subspace(initial, params)
    if len(sub) == 0:
        return []
    out = []
    excited = dressed_spectrum(sub)
    for g in ground_spectrum(sub):
        drive = sub.probe_matrix @ g.vector
        for e in excited:
            element = np.vdot(e.vector, drive)
            e_state = DressedState(e.energy, e.vector, float(abs(element)), e.labels)
            out.append(Resonance(g, e_state, e.energy - g.energy, 2.0 * float(abs(element))))
    return out


def spectrum_to_dict(sub: Subspace, spectrum: list[DressedState]) -> dict:
    return {
        "initial": format_label(sub.initial),
        "labels": [format_label(lab) for lab in sub.labels],
        "eigenvalues_Hz": [s.energy / (2 * math.pi) for s in spectrum],
        "overlaps_Hz": [s.probe_overlap / (2 * math.pi) for s in spectrum],
    }


def resonances_to_dict(resonances: list[Resonance]) -> list[dict]:
    return [
        {
            "ground": r.ground.describe(),
            "excited": r.excited.describe(),
            "delta_d_Hz": r.delta_d / (2 * math.pi),
            "omega_d_Hz": r.omega_d / (2 * math.pi),
        }
        for r in resonances
    ]

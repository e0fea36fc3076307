"""Truncated Hilbert space of two four-level ions sharing one motional mode.

Basis ordering is fixed: ion 1 is the outermost tensor factor, ion 2 the
middle one and the phonon number the innermost, so

    index = (4 * k + l) * (n_max + 1) + n

for ion-1 level ``k``, ion-2 level ``l`` and phonon number ``n``.  Every
matrix and every serialized population uses this ordering.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

N_IONS = 2
N_LEVELS = 4


class TruncationError(ValueError):
    """Raised when a phonon number lies outside the truncated Fock space."""


class Level(IntEnum):
    """Electronic levels of one ion, in matrix-index order."""

    ZERO = 0
    ONE = 1
    F = 2
    E = 3

    @property
    def symbol(self) -> str:
        return "01fe"[self]

    @classmethod
    def parse(cls, value: "Level | int | str") -> "Level":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls("01fe".index(value.lower()))
            except ValueError:
                raise ValueError(f"unknown level {value!r}") from None
        return cls(value)


@dataclass(frozen=True)
class HilbertSpace:
    fock_cutoff: int = 5

    def __post_init__(self):
        if int(self.fock_cutoff) != self.fock_cutoff or self.fock_cutoff < 1:
            raise ValueError(f"fock_cutoff must be an integer >= 1, got {self.fock_cutoff}")

    @property
    def n_ions(self) -> int:
        return N_IONS

    @property
    def n_levels(self) -> int:
        return N_LEVELS

    @property
    def n_fock(self) -> int:
        return self.fock_cutoff + 1

    @property
    def dim(self) -> int:
        return N_LEVELS * N_LEVELS * self.n_fock


def basis_index(space: HilbertSpace, k, l, n: int) -> int:
    """Index of the product state |k l>|n> in the fixed basis ordering."""
    k, l = Level.parse(k), Level.parse(l)
    if not 0 <= n <= space.fock_cutoff:
        raise TruncationError(f"phonon number {n} outside [0, {space.fock_cutoff}]")
    return (N_LEVELS * int(k) + int(l)) * space.n_fock + int(n)


def basis_label(space: HilbertSpace, index: int) -> tuple[Level, Level, int]:
    if not 0 <= index < space.dim:
        raise IndexError(f"basis index {index} outside [0, {space.dim})")
    pair, n = divmod(int(index), space.n_fock)
    k, l = divmod(pair, N_LEVELS)
    return Level(k), Level(l), n


def format_label(label) -> str:
    k, l, n = label
    return f"|{Level.parse(k).symbol}{Level.parse(l).symbol},{n}>"


def basis_vector(space: HilbertSpace, k, l, n: int) -> np.ndarray:
    v = np.zeros(space.dim, dtype=complex)
    v[basis_index(space, k, l, n)] = 1.0
    return v


def identity(space: HilbertSpace) -> np.ndarray:
    return np.eye(space.dim, dtype=complex)


def _phonon_lowering(n_fock: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_fock)), 1).astype(complex)


def ladder_down(space: HilbertSpace) -> np.ndarray:
    """Phonon annihilation operator, identity on both ions."""
    return np.kron(np.eye(N_LEVELS * N_LEVELS), _phonon_lowering(space.n_fock))


def ladder_up(space: HilbertSpace) -> np.ndarray:
    return ladder_down(space).conj().T


def number_op(space: HilbertSpace) -> np.ndarray:
    return np.kron(np.eye(N_LEVELS * N_LEVELS), np.diag(np.arange(space.n_fock)).astype(complex))


def level_projector(level) -> np.ndarray:
    p = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
    i = Level.parse(level)
    p[i, i] = 1.0
    return p


def ion_op(space: HilbertSpace, ion: int, bra, ket) -> np.ndarray:
    """Embed ``|bra><ket|`` on the addressed ion (1 or 2).

    The naming follows the outer-product convention: ``ion_op(space, 1, 'f', '0')``
    maps ``|0>`` on ion 1 to ``|f>``.
    """
    single = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
    single[Level.parse(bra), Level.parse(ket)] = 1.0
    return embed_electronic(space, ion_factor(ion, single))


def ion_factor(ion: int, single: np.ndarray) -> np.ndarray:
    """Lift a 4x4 single-ion operator to the 16-dim two-ion electronic space."""
    eye = np.eye(N_LEVELS)
    if ion == 1:
        return np.kron(single, eye)
    if ion == 2:
        return np.kron(eye, single)
    raise ValueError(f"ion must be 1 or 2, got {ion}")


def embed_electronic(space: HilbertSpace, op: np.ndarray) -> np.ndarray:
    """Tensor a 16x16 electronic operator with the phonon identity."""
    op = np.asarray(op)
    if op.shape != (N_LEVELS**2, N_LEVELS**2):
        raise ValueError(f"electronic operator must be 16x16, got {op.shape}")
    return np.kron(op, np.eye(space.n_fock))


def swap_ions(space: HilbertSpace) -> np.ndarray:
    """Permutation matrix exchanging the electronic states of the two ions."""
    perm = np.zeros((space.dim, space.dim))
    for i in range(space.dim):
        k, l, n = basis_label(space, i)
        perm[basis_index(space, l, k, n), i] = 1.0
    return perm

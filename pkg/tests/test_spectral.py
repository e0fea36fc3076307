import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from iongates.model import SystemParams
from iongates.operators import Level
from iongates.spectral import (
    dressed_basis,
    dressed_spectrum,
    excited_subspace,
    gate_detuning,
    ground_spectrum,
    resonance_offsets,
    resonances_to_dict,
    spectrum_to_dict,
)

L0, L1, LF = Level.ZERO, Level.ONE, Level.F


def shifts(sub):
    """Dressed energies relative to the (common) bare energy of the subspace."""
    bare = np.trace(sub.hamiltonian).real / len(sub)
    return np.array([s.energy - bare for s in dressed_spectrum(sub)])


class TestGateDetuning:
    def test_values(self):
        assert gate_detuning("OR", 2.0) == pytest.approx(math.sqrt(2))
        assert gate_detuning("nor", 2.0) == 1.0

    def test_unknown(self):
        with pytest.raises(ValueError):
            gate_detuning("XOR", 1.0)


class TestSubspaces:
    def test_two_state_subspace(self, paper_params):
        sub = excited_subspace((0, 0, 0), paper_params)
        assert set(sub.labels) == {(LF, L0, 0), (L1, L0, 1)}
        assert np.allclose(sorted(shifts(sub)), [-paper_params.omega_sb / 2, paper_params.omega_sb / 2], rtol=1e-10)

    def test_three_state_subspace(self, paper_params):
        sub = excited_subspace((0, 1, 0), paper_params)
        assert set(sub.labels) == {(LF, L1, 0), (L1, LF, 0), (L1, L1, 1)}
        w = paper_params.omega_sb / math.sqrt(2)
        assert np.allclose(sorted(shifts(sub)), [-w, 0, w], rtol=1e-10, atol=1e-9 * w)

    def test_connectivity_without_coupling(self):
        # The subspace is structural; it survives a zero sideband amplitude.
        p = SystemParams.from_hz(omega_sb_hz=0.0)
        assert len(excited_subspace((0, 1, 0), p)) == 3

    def test_unaddressed_input_is_empty(self, paper_params):
        sub = excited_subspace((1, 0, 0), paper_params)
        assert len(sub) == 0
        with pytest.raises(ValueError, match="couples to no excited state"):
            dressed_spectrum(sub)
        assert resonance_offsets((1, 0, 0), paper_params) == []

    def test_probe_overlaps(self, paper_params):
        spec = dressed_spectrum(excited_subspace((0, 0, 0), paper_params))
        for s in spec:
            assert s.probe_overlap == pytest.approx(paper_params.omega_f / 2 / math.sqrt(2))

    @given(st.floats(1e2, 1e5))
    def test_shifts_scale_with_coupling(self, omega_sb_hz):
        p = SystemParams.from_hz(omega_sb_hz=omega_sb_hz, fock_cutoff=2)
        w = p.omega_sb / math.sqrt(2)
        assert np.allclose(sorted(shifts(excited_subspace((0, 1, 0), p))), [-w, 0, w], atol=1e-9 * w)


class TestDressedBasis:
    def test_phase_convention(self, paper_params):
        for s in dressed_spectrum(excited_subspace((0, 1, 1), paper_params)):
            i = np.argmax(np.abs(s.vector))
            assert s.vector[i].imag == 0 and s.vector[i].real > 0
            assert np.linalg.norm(s.vector) == pytest.approx(1)

    def test_degenerate_states_have_exchange_parity(self, paper_params):
        sub = excited_subspace((0, 1, 1), paper_params)
        evals, vecs = dressed_basis(sub.hamiltonian, sub.labels)
        index = {lab: i for i, lab in enumerate(sub.labels)}
        swap = np.zeros((len(sub), len(sub)))
        for i, (k, l, n) in enumerate(sub.labels):
            swap[index[(l, k, n)], i] = 1
        for j in range(len(evals)):
            v = vecs[:, j]
            parity = np.vdot(v, swap @ v).real
            assert abs(abs(parity) - 1) < 1e-9

    def test_empty(self):
        evals, vecs = dressed_basis(np.zeros((0, 0)), ())
        assert evals.size == 0

    def test_describe(self, paper_params):
        text = dressed_spectrum(excited_subspace((0, 0, 0), paper_params))[0].describe()
        assert "|f0,0>" in text and "|10,1>" in text


class TestResonances:
    def find(self, resonances, delta, omega, tol):
        return [r for r in resonances if abs(r.delta_d - delta) < tol and abs(r.omega_d - omega) < tol]

    def test_or_branch_00(self, paper_params):
        g, f = paper_params.omega_sb / 2, paper_params.omega_f
        res = resonance_offsets((0, 0, 0), paper_params, gate="OR")
        assert self.find(res, (math.sqrt(2) - 1) * g, f / math.sqrt(2), 1e-10 * paper_params.omega_sb)

    def test_or_resonant_01(self, paper_params):
        res = resonance_offsets((0, 1, 0), paper_params, gate="OR")
        assert self.find(res, 0.0, paper_params.omega_f / 2, 1e-10 * paper_params.omega_sb)

    def test_nor_resonant_00(self, paper_params):
        res = resonance_offsets((0, 0, 0), paper_params, gate="NOR")
        assert self.find(res, 0.0, paper_params.omega_f / math.sqrt(2), 1e-10 * paper_params.omega_sb)

    def test_or_00_n1_resonant(self, paper_params):
        # One phonon enhances the coupling by sqrt(2), which is exactly the OR condition.
        res = resonance_offsets((0, 0, 1), paper_params, gate="OR")
        assert self.find(res, 0.0, paper_params.omega_f / math.sqrt(2), 1e-10 * paper_params.omega_sb)

    def test_serialization(self, paper_params):
        sub = excited_subspace((0, 1, 0), paper_params)
        d = spectrum_to_dict(sub, dressed_spectrum(sub))
        assert d["initial"] == "|01,0>" and len(d["eigenvalues_Hz"]) == 3
        rows = resonances_to_dict(resonance_offsets((0, 1, 0), paper_params, gate="OR"))
        assert {"ground", "excited", "delta_d_Hz", "omega_d_Hz"} <= set(rows[0])

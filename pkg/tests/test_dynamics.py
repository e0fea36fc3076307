import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from iongates import dynamics
from iongates.dynamics import (
    IntegrationError,
    IntegratorConfig,
    PulseSegment,
    PulseSequence,
    Trajectory,
    apply_unitary,
    convergence_check,
    default_max_step,
    electronic_populations,
    evolve,
    lindblad_rhs,
    mean_phonon,
    merge_readout,
    populations,
    run_sequence,
    segment_generator,
)
from iongates.gates import shelving_unitary
from iongates.model import DensityState, SystemParams, fock_initial_state, thermal_initial_state
from iongates.operators import Level, basis_index
from oracles import expm_evolve


def random_density(dim, rng):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


class TestSegments:
    def test_negative_duration(self):
        with pytest.raises(ValueError):
            PulseSegment(-1.0)

    def test_empty_sequence(self):
        with pytest.raises(ValueError):
            PulseSequence(())

    def test_sequence_duration(self):
        seq = PulseSequence([PulseSegment(1e-4), PulseSegment(2e-4)])
        assert seq.duration == pytest.approx(3e-4)
        assert len(seq) == 2 and seq[1].duration == 2e-4

    @pytest.mark.parametrize("kw", [{"rel_tol": 0}, {"max_step": -1.0}, {"method": "Euler"}, {"samples": 1}])
    def test_config_validation(self, kw):
        with pytest.raises(ValueError):
            IntegratorConfig(**kw)


class TestGenerator:
    def test_rhs_trace_and_hermiticity(self, small_params):
        rng = np.random.default_rng(1)
        seg = PulseSegment(1e-4, probe_on=True, sideband_on=True, cooling_on=True, pump_ions={1})
        H, jumps = segment_generator(small_params, seg)
        rho = random_density(small_params.space.dim, rng)
        d = lindblad_rhs(H, jumps, rho)
        assert abs(np.trace(d)) < 1e-6 * np.max(np.abs(d))
        assert np.allclose(d, d.conj().T)

    def test_sparse_rhs_matches_dense(self, small_params):
        rng = np.random.default_rng(2)
        seg = PulseSegment(1e-4, probe_on=True, sideband_on=True, cooling_on=True, pump_ions={1, 2})
        H, jumps = segment_generator(small_params, seg)
        rho = random_density(small_params.space.dim, rng)
        fast = dynamics._rhs_function(H, jumps)(0.0, rho.ravel()).reshape(rho.shape)
        assert np.allclose(fast, lindblad_rhs(H, jumps, rho), rtol=0, atol=1e-9 * np.max(np.abs(fast)))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            lindblad_rhs(np.eye(2), [], np.eye(3))
        with pytest.raises(ValueError):
            lindblad_rhs(np.eye(2), [np.eye(3)], np.eye(2))

    def test_active_terms(self, small_params):
        _, jumps = segment_generator(small_params, PulseSegment(1.0))
        assert len(jumps) == 2  # heating runs in every segment
        _, jumps = segment_generator(small_params.replace(heating_rate=0), PulseSegment(1.0, cooling_on=True))
        assert len(jumps) == 1

    def test_default_max_step(self):
        p = SystemParams.from_hz()
        assert default_max_step(p, PulseSegment(1.0, probe_on=True, sideband_on=True)) == pytest.approx(1 / (50 * 8e3))
        assert default_max_step(p, PulseSegment(1.0, pump_ions={1})) == pytest.approx(1 / (50 * 1e5))
        assert default_max_step(p.replace(heating_rate=0), PulseSegment(1.0)) == np.inf


class TestExpmOracle:
    """The integrator against exp(L t) of the vectorized Liouvillian."""

    @pytest.mark.parametrize("segment", [
        PulseSegment(300e-6, probe_on=True, sideband_on=True),
        PulseSegment(300e-6, sideband_on=True, cooling_on=True),
        PulseSegment(20e-6, pump_ions={1, 2}),
    ])
    def test_segment(self, small_params, segment):
        p = small_params.replace(delta_probe=small_params.omega_sb / math.sqrt(2))
        rng = np.random.default_rng(3)
        rho0 = random_density(p.space.dim, rng)
        final, _ = evolve(DensityState(p.space, rho0), segment, p)
        H, jumps = segment_generator(p, segment)
        ref = expm_evolve(rho0, H, jumps, segment.duration)
        err = np.max(np.abs(electronic_populations(p.space, final.rho) - electronic_populations(p.space, ref)))
        assert err < 1e-6
        assert np.max(np.abs(final.rho - ref)) < 1e-6

    def test_sequence(self, small_params):
        p = small_params.replace(delta_probe=small_params.omega_sb / 2)
        seq = PulseSequence([
            PulseSegment(0.0, extra_unitaries=(shelving_unitary(),)),
            PulseSegment(200e-6, probe_on=True, sideband_on=True),
            PulseSegment(200e-6, sideband_on=True, cooling_on=True),
            PulseSegment(30e-6, pump_ions={1}),
        ])
        rho0 = thermal_initial_state(p, 1, 0)
        final, traj = run_sequence(rho0, seq, p)
        ref = rho0.rho
        for seg in seq:
            for U in seg.extra_unitaries:
                ref = apply_unitary(DensityState(p.space, ref), U).rho
            ref = expm_evolve(ref, *segment_generator(p, seg), seg.duration)
        assert np.max(np.abs(electronic_populations(p.space, final.rho) - electronic_populations(p.space, ref))) < 1e-6
        assert np.all(np.diff(traj.times) >= 0)
        assert traj.times[-1] == pytest.approx(seq.duration)


class TestClosedForms:
    def test_carrier_rabi(self):
        p = SystemParams.from_hz(fock_cutoff=1, heating_rate=0.0)
        t = np.linspace(0, 1e-3, 11)
        _, traj = evolve(fock_initial_state(p, 0, 0, 0), PulseSegment(1e-3, probe_on=True), p, t_eval=t)
        assert np.allclose(traj.population("f", 0), np.sin(p.omega_f * t / 2) ** 2, atol=1e-7)

    def test_heating_slope(self):
        # Equal up/down rates give d<n>/dt = heating rate exactly below the cutoff.
        p = SystemParams(fock_cutoff=14, heating_rate=106.0)
        t = np.linspace(0, 5e-3, 11)
        _, traj = evolve(fock_initial_state(p, 0, 0, 0), PulseSegment(5e-3), p, t_eval=t)
        slope = np.polyfit(t, traj.mean_n, 1)[0]
        assert slope == pytest.approx(106.0, rel=1e-4)

    def test_cooling_decay(self):
        p = SystemParams(fock_cutoff=4, heating_rate=0.0, gamma_f=4.5e3)
        t = np.linspace(0, 5e-4, 6)
        _, traj = evolve(fock_initial_state(p, 0, 0, 3), PulseSegment(5e-4, cooling_on=True), p, t_eval=t)
        assert np.allclose(traj.mean_n, 3 * np.exp(-4.5e3 * t), rtol=1e-6)

    def test_pump_decay(self):
        p = SystemParams(fock_cutoff=1, heating_rate=0.0, gamma_e=1e5)
        t = np.linspace(0, 5e-5, 6)
        _, traj = evolve(fock_initial_state(p, "e", "e", 0), PulseSegment(5e-5, pump_ions={1}), p, t_eval=t)
        assert np.allclose(traj.population("e", "e"), np.exp(-1e5 * t), atol=1e-8)
        assert np.allclose(traj.population(0, "e"), 1 - np.exp(-1e5 * t), atol=1e-8)

    def test_zero_duration_and_idle(self, small_params):
        rho0 = thermal_initial_state(small_params, 0, 1)
        final, traj = evolve(rho0, PulseSegment(0.0), small_params)
        assert np.array_equal(final.rho, rho0.rho)
        idle = small_params.replace(heating_rate=0)
        final, _ = evolve(rho0, PulseSegment(1e-3), idle)
        assert np.array_equal(final.rho, rho0.rho)


class TestObservables:
    def test_merge_readout(self):
        pops = np.arange(16, dtype=float).reshape(4, 4)
        merged = merge_readout(pops)
        assert merged.sum() == pytest.approx(pops.sum())
        assert merged[Level.ONE, Level.ONE] == pops[1, 1] + pops[1, 2] + pops[2, 1] + pops[2, 2]
        assert not merged[Level.F].any() and not merged[:, Level.F].any()

    def test_populations_dict(self, small_params):
        s = fock_initial_state(small_params, "f", 1, 1)
        assert populations(s)[(Level.F, Level.ONE)] == 1
        assert populations(s, readout_merge_1f=True)[(Level.ONE, Level.ONE)] == 1
        assert mean_phonon(s) == 1

    def test_trajectory_csv(self, small_params, tmp_path):
        _, traj = evolve(thermal_initial_state(small_params, 0, 0), PulseSegment(1e-4, probe_on=True), small_params,
                         IntegratorConfig(samples=5))
        path = tmp_path / "t.csv"
        traj.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("time_s,P_00,P_01") and lines[0].endswith("mean_n,ground_frac")
        assert len(lines) == 6

    def test_hygiene_recorded(self, small_params):
        _, traj = evolve(thermal_initial_state(small_params, 0, 1),
                         PulseSegment(5e-4, probe_on=True, sideband_on=True), small_params)
        assert len(traj) == 200
        assert np.max(traj.trace_dev) < 1e-8
        assert np.max(traj.herm_dev) < 1e-10
        assert np.min(traj.min_eig) > -1e-8

    def test_apply_unitary_full_and_electronic(self, small_params):
        s = fock_initial_state(small_params, 1, 0, 1)
        out = apply_unitary(s, shelving_unitary())
        assert out.rho[basis_index(small_params.space, "e", 0, 1), basis_index(small_params.space, "e", 0, 1)] == pytest.approx(1)


class TestConvergence:
    def test_converges_with_cutoff(self):
        p = SystemParams.from_hz(delta_probe_hz=8e3 / math.sqrt(2))
        seq = PulseSequence([PulseSegment(200e-6, probe_on=True, sideband_on=True)])
        report = convergence_check((0, 1), seq, p, cutoffs=(3, 4, 5), tol=1e-4)
        assert report.passed
        assert report.differences[-1] < report.differences[0]
        assert report.to_dict()["cutoffs"] == [3, 4, 5]

    def test_single_cutoff_not_passed(self):
        p = SystemParams.from_hz()
        seq = PulseSequence([PulseSegment(1e-5, probe_on=True)])
        report = convergence_check(lambda q: fock_initial_state(q, 0, 0, 0), seq, p, cutoffs=(2,))
        assert not report.passed and report.differences == []


class TestFailure:
    def test_integration_error(self, small_params, monkeypatch):
        class Failed:
            status, message, t = -1, "step size too small", np.array([0.0, 1e-6])

        monkeypatch.setattr(dynamics, "solve_ivp", lambda *a, **k: Failed())
        with pytest.raises(IntegrationError, match="step size too small") as exc:
            evolve(thermal_initial_state(small_params, 0, 0), PulseSegment(1e-4, probe_on=True), small_params)
        assert exc.value.time == pytest.approx(1e-6)

    def test_space_mismatch(self, small_params):
        with pytest.raises(ValueError):
            evolve(thermal_initial_state(small_params, 0, 0), PulseSegment(1e-4), small_params.replace(fock_cutoff=3))


@given(st.floats(0.0, 2e-4), st.integers(0, 2))
def test_trace_preserved(duration, n):
    p = SystemParams.from_hz(fock_cutoff=2, delta_probe_hz=4e3)
    seg = PulseSegment(duration, probe_on=True, sideband_on=True, cooling_on=True)
    final, _ = evolve(fock_initial_state(p, 0, 1, n), seg, p, IntegratorConfig(samples=2))
    final.check(trace_tol=1e-8)


def test_concatenate_lengths():
    a = Trajectory(np.array([0.0, 1.0]), np.zeros((2, 4, 4)), np.zeros(2), np.ones(2))
    b = a.shifted(1.0)
    c = Trajectory.concatenate([a, b])
    assert list(c.times) == [0, 1, 1, 2]
